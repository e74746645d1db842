"""Tensor-product Hilbert spaces, operators and states.

Thin complex linear-algebra substrate shared by every other module: described
tensor-product spaces, dense/sparse operators, pure/density states, and the
handful of quantum-mechanical primitives (tensor, embed, partial trace,
expectation values) the chain model is assembled from.

Operators and states are treated as immutable values after construction;
nothing in this package mutates their arrays in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np
import scipy.sparse as sp

# Builders switch from dense to sparse storage above this total dimension.
DENSE_DIM_LIMIT = 1024

HERMITICITY_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """Raised when operators/states live on incompatible spaces."""


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered list of local factor dimensions of a tensor-product space."""

    factors: tuple[int, ...]

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ValueError("space needs at least one factor")
        if any(int(d) < 2 for d in self.factors):
            raise ValueError(f"every factor dimension must be >= 2, got {self.factors}")
        object.__setattr__(self, "factors", tuple(int(d) for d in self.factors))

    @property
    def dim(self) -> int:
        return prod(self.factors)

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @classmethod
    def chain(cls, n_nodes: int, n_max: int) -> "SpaceDescriptor":
        """Interleaved (atom, cavity) factors: (3, n_max+1) per node."""
        if n_nodes < 1:
            raise ValueError("need at least one node")
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        return cls(factors=(3, n_max + 1) * n_nodes)

    def basis_index(self, occupations) -> int:
        """Flat index of the product basis state |occupations...> (row-major)."""
        if len(occupations) != self.n_factors:
            raise DimensionMismatchError(
                f"expected {self.n_factors} occupation numbers, got {len(occupations)}"
            )
        idx = 0
        for occ, d in zip(occupations, self.factors):
            if not 0 <= occ < d:
                raise ValueError(f"occupation {occ} out of range for factor of dim {d}")
            idx = idx * d + occ
        return idx


def _as_matrix(data, dim: int):
    if sp.issparse(data):
        mat = data.tocsr()
    else:
        mat = np.asarray(data, dtype=complex)
    if mat.shape != (dim, dim):
        raise DimensionMismatchError(f"matrix shape {mat.shape} does not match dim {dim}")
    return mat


@dataclass(frozen=True)
class QOperator:
    """Complex square matrix on a described tensor-product space.

    Storage is dense (ndarray) or sparse (CSR); arithmetic works across both.
    """

    space: SpaceDescriptor
    matrix: object  # ndarray or scipy sparse

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix(self.matrix, self.space.dim))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def dag(self) -> "QOperator":
        return QOperator(self.space, self.matrix.conj().T)

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        if sp.issparse(d):
            return float(np.abs(d.data).max()) if d.nnz else 0.0
        return float(np.abs(d).max())

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.hermiticity_defect() <= tol

    def _wrap(self, mat) -> "QOperator":
        return QOperator(self.space, mat)

    def _check_space(self, other: "QOperator"):
        if self.space != other.space:
            raise DimensionMismatchError("operators live on different spaces")

    def __add__(self, other: "QOperator") -> "QOperator":
        self._check_space(other)
        return self._wrap(self.matrix + other.matrix)

    def __sub__(self, other: "QOperator") -> "QOperator":
        self._check_space(other)
        return self._wrap(self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "QOperator":
        return self._wrap(self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "QOperator") -> "QOperator":
        self._check_space(other)
        return self._wrap(self.matrix @ other.matrix)

    def trace(self) -> complex:
        if self.is_sparse:
            return complex(self.matrix.diagonal().sum())
        return complex(np.trace(self.matrix))

    def norm_scale(self) -> float:
        """Cheap upper bound on the spectral norm (induced infinity norm)."""
        m = abs(self.matrix)
        row_sums = np.asarray(m.sum(axis=1)).ravel()
        return float(row_sums.max())


@dataclass(frozen=True)
class QState:
    """Pure state vector or density matrix tagged with its space."""

    space: SpaceDescriptor
    kind: str  # 'pure' | 'density'
    data: np.ndarray

    def __post_init__(self):
        if self.kind not in ("pure", "density"):
            raise ValueError(f"kind must be 'pure' or 'density', got {self.kind!r}")
        arr = np.asarray(self.data, dtype=complex)
        expected = (self.space.dim,) if self.kind == "pure" else (self.space.dim, self.space.dim)
        if arr.shape != expected:
            raise DimensionMismatchError(f"state shape {arr.shape}, expected {expected}")
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.space.dim

    def norm(self) -> float:
        if self.kind == "pure":
            return float(np.linalg.norm(self.data))
        return float(abs(np.trace(self.data)))

    def to_density(self) -> "QState":
        if self.kind == "density":
            return self
        return QState(self.space, "density", np.outer(self.data, self.data.conj()))

    def validate(self, norm_tol: float = 1e-9, eig_tol: float = 1e-8) -> None:
        """Check the state invariants; raise ValueError on violation."""
        if self.kind == "pure":
            n = np.linalg.norm(self.data)
            if abs(n - 1.0) > norm_tol:
                raise ValueError(f"pure state norm {n} deviates from 1 by more than {norm_tol}")
            return
        tr = np.trace(self.data)
        if abs(tr - 1.0) > norm_tol:
            raise ValueError(f"density matrix trace {tr} deviates from 1 by more than {norm_tol}")
        if np.abs(self.data - self.data.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        evals = np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))
        if evals.min() < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")


# ---------------------------------------------------------------------------
# local building blocks
# ---------------------------------------------------------------------------

def identity(space: SpaceDescriptor, sparse: bool | None = None) -> QOperator:
    if sparse is None:
        sparse = space.dim >= DENSE_DIM_LIMIT
    mat = sp.identity(space.dim, dtype=complex, format="csr") if sparse else np.eye(space.dim, dtype=complex)
    return QOperator(space, mat)


def destroy_op(dim: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on a dim-level Fock space."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number_op(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def ket_bra(dim: int, i: int, j: int) -> np.ndarray:
    """|i><j| on a dim-level system."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def basis_state(space: SpaceDescriptor, occupations) -> QState:
    """Product basis state with the given occupation per factor."""
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.basis_index(occupations)] = 1.0
    return QState(space, "pure", vec)


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def tensor(a: QOperator, b: QOperator, *rest: QOperator) -> QOperator:
    """Kronecker product; result space is the concatenated factor list."""
    ops = (a, b) + rest
    space = SpaceDescriptor(tuple(f for op in ops for f in op.space.factors))
    out = ops[0].matrix
    any_sparse = any(op.is_sparse for op in ops) or space.dim >= DENSE_DIM_LIMIT
    for op in ops[1:]:
        if any_sparse:
            out = sp.kron(sp.csr_matrix(out) if not sp.issparse(out) else out, op.matrix, format="csr")
        else:
            out = np.kron(out, op.matrix)
    return QOperator(space, out)


def embed(local, factor_index: int, space: SpaceDescriptor) -> QOperator:
    """Lift a local operator to the full space: identity on all other factors.

    `local` may be a QOperator on a single-factor space or a raw matrix.
    """
    mat = local.matrix if isinstance(local, QOperator) else np.asarray(local, dtype=complex)
    if not 0 <= factor_index < space.n_factors:
        raise DimensionMismatchError(f"factor index {factor_index} out of range")
    d = space.factors[factor_index]
    if mat.shape != (d, d):
        raise DimensionMismatchError(
            f"local operator shape {mat.shape} does not match factor dimension {d}"
        )
    d_pre = prod(space.factors[:factor_index]) if factor_index else 1
    d_post = prod(space.factors[factor_index + 1:]) if factor_index + 1 < space.n_factors else 1
    if space.dim >= DENSE_DIM_LIMIT:
        out = sp.kron(sp.identity(d_pre, dtype=complex, format="csr"),
                      sp.kron(sp.csr_matrix(mat), sp.identity(d_post, dtype=complex, format="csr"),
                              format="csr"), format="csr")
    else:
        out = np.kron(np.eye(d_pre, dtype=complex), np.kron(mat, np.eye(d_post, dtype=complex)))
    return QOperator(space, out)


def _ptrace_matrix(mat: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Partial trace of a dense matrix over the factors not in `keep`."""
    n = len(dims)
    tensor_form = mat.reshape(dims + dims)
    traced = 0
    for f in range(n):
        if f in keep:
            continue
        ax1 = f - traced
        ax2 = ax1 + (n - traced)
        tensor_form = np.trace(tensor_form, axis1=ax1, axis2=ax2)
        traced += 1
    d_keep = prod(dims[f] for f in keep)
    return tensor_form.reshape(d_keep, d_keep)


def partial_trace(state: QState, keep) -> QState:
    """Reduced density matrix on the kept factors (trace preserved)."""
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep:
        raise ValueError("keep-set must not be empty")
    if any(k < 0 or k >= state.space.n_factors for k in keep):
        raise DimensionMismatchError("keep indices out of range")
    rho = state.to_density().data
    reduced = _ptrace_matrix(rho, state.space.factors, keep)
    sub_space = SpaceDescriptor(tuple(state.space.factors[k] for k in keep))
    return QState(sub_space, "density", reduced)


def expectation(op: QOperator, state: QState) -> complex:
    """<psi|op|psi> for pure states, tr(rho op) for density matrices."""
    if op.space != state.space:
        raise DimensionMismatchError("operator and state live on different spaces")
    if state.kind == "pure":
        return complex(np.vdot(state.data, op.matrix @ state.data))
    prod_mat = op.matrix @ state.data
    if sp.issparse(prod_mat):
        return complex(prod_mat.diagonal().sum())
    return complex(np.trace(prod_mat))
