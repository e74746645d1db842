"""Full-system model of the coupled-resonator waveguide.

Each node is one cavity (Fock-truncated at n_max) plus one trapped three-level
atom with lower states |0>, |1> and upper state |e|.  All rates are expressed
in units of the atom-cavity coupling g.  The Hamiltonian is assembled in the
rotating frame in which the atom-cavity and laser couplings are static and the
cavities carry the detuning Delta, so observable populations match the
interaction-picture dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    QOperator,
    QState,
    SpaceDescriptor,
    destroy_op,
    embed,
    ket_bra,
    number_op,
)

# atomic level ordering within each 3-dimensional atom factor
LVL_0, LVL_1, LVL_E = 0, 1, 2

BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class ChainParams:
    """Physical rates and sizes of the chain, in units of g (g = 1).

    omega may be passed as a scalar (applied to the first and last node, all
    middle nodes undriven) or as a full length-n sequence of complex Rabi
    frequencies.

    boundary selects the photon-hopping topology of the assembled Hamiltonian.
    The nearest-neighbour sum wraps around for 'periodic'; 'open' drops the
    wrap link.  The closed-form effective model always uses the periodic mode
    structure, and the wrap link is what carries the end-to-end Raman transfer,
    so transfer experiments run 'periodic' (see README).
    """

    n: int
    delta: float
    j_c: float
    omega: tuple = (0.0,)
    gamma: float = 0.0
    kappa: float = 0.0
    n_max: int = 1
    g: float = 1.0
    boundary: str = "open"
    branch_to_1: float = 0.0  # fraction of gamma decaying |e> -> |1|
    laser_detuning: float = 0.0  # omega_L minus the |1>-|e> transition

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two nodes")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        for name in ("gamma", "kappa", "g", "j_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.branch_to_1 <= 1.0:
            raise ValueError("branch_to_1 must lie in [0, 1]")
        om = self.omega
        if np.isscalar(om):
            full = [0.0 + 0.0j] * self.n
            full[0] = complex(om)
            full[-1] = complex(om)
            om = tuple(full)
        else:
            om = tuple(complex(x) for x in om)
            if len(om) != self.n:
                raise ValueError(f"omega must have length n={self.n}, got {len(om)}")
        object.__setattr__(self, "omega", om)

    @property
    def space(self) -> SpaceDescriptor:
        return SpaceDescriptor.chain(self.n, self.n_max)

    def atom_factor(self, node: int) -> int:
        """Factor index of the atom at 0-based node."""
        return 2 * node

    def cavity_factor(self, node: int) -> int:
        return 2 * node + 1

    def replace(self, **kw) -> "ChainParams":
        from dataclasses import replace as _replace
        return _replace(self, **kw)


@dataclass(frozen=True)
class LindbladSet:
    """Jump operators, each scaled by the square root of its rate."""

    operators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)


def _hop_links(p: ChainParams):
    links = [(j, j + 1) for j in range(p.n - 1)]
    if p.boundary == "periodic":
        links.append((p.n - 1, 0))  # wrap term of the nearest-neighbour sum
    return links


def build_hamiltonian_parts(p: ChainParams):
    """Static Hamiltonian without lasers, plus per-node unit-Rabi drive terms.

    Returns (h_static, drives) with drives[j] = |e>_j<1| embedded in the full
    space; the complete Hamiltonian is
        h_static + sum_j (Omega_j * drives[j] + conj(Omega_j) * drives[j]^dag).
    """
    space = p.space
    nphot = number_op(p.n_max + 1)
    a_local = destroy_op(p.n_max + 1)
    sig_0e = ket_bra(3, LVL_0, LVL_E)  # |0><e|
    sig_e1 = ket_bra(3, LVL_E, LVL_1)  # |e><1|
    p11 = ket_bra(3, LVL_1, LVL_1)

    terms = []
    for j in range(p.n):
        terms.append(p.delta * embed(nphot, p.cavity_factor(j), space).matrix)
        if p.laser_detuning:
            terms.append(p.laser_detuning * embed(p11, p.atom_factor(j), space).matrix)
        # g (a_j^dag |0>_j<e| + h.c.)
        adag = embed(a_local.conj().T, p.cavity_factor(j), space).matrix
        s0e = embed(sig_0e, p.atom_factor(j), space).matrix
        ac = p.g * (adag @ s0e)
        terms.append(ac + ac.conj().T)
    for (j, l) in _hop_links(p):
        adag_j = embed(a_local.conj().T, p.cavity_factor(j), space).matrix
        a_l = embed(a_local, p.cavity_factor(l), space).matrix
        hop = p.j_c * (adag_j @ a_l)
        terms.append(hop + hop.conj().T)

    h_static = terms[0]
    for t in terms[1:]:
        h_static = h_static + t

    drives = {j: QOperator(space, embed(sig_e1, p.atom_factor(j), space).matrix)
              for j in range(p.n)}
    return QOperator(space, h_static), drives


def build_hamiltonian(p: ChainParams) -> QOperator:
    """Rotating-frame chain Hamiltonian.

    H = Delta sum_j n_j + J_c sum_<j,j+1> (a_j^dag a_{j+1} + h.c.)
        + g sum_j (a_j^dag |0>_j<e| + h.c.) + sum_j (Omega_j |e>_j<1| + h.c.)
    """
    h_static, drives = build_hamiltonian_parts(p)
    h = h_static.matrix
    for j, om in enumerate(p.omega):
        if om != 0:
            t = om * drives[j].matrix
            h = h + t + t.conj().T
    return QOperator(p.space, h)


def build_lindblad(p: ChainParams) -> LindbladSet:
    """Cavity decay and spontaneous-emission jump operators."""
    space = p.space
    ops = []
    if p.kappa > 0:
        a_local = destroy_op(p.n_max + 1)
        for j in range(p.n):
            ops.append(QOperator(space, np.sqrt(p.kappa) * embed(a_local, p.cavity_factor(j), space).matrix))
    if p.gamma > 0:
        g0 = p.gamma * (1.0 - p.branch_to_1)
        g1 = p.gamma * p.branch_to_1
        for j in range(p.n):
            if g0 > 0:
                ops.append(QOperator(space, np.sqrt(g0) * embed(ket_bra(3, LVL_0, LVL_E), p.atom_factor(j), space).matrix))
            if g1 > 0:
                ops.append(QOperator(space, np.sqrt(g1) * embed(ket_bra(3, LVL_1, LVL_E), p.atom_factor(j), space).matrix))
    return LindbladSet(tuple(ops))


def initial_transfer_state(p: ChainParams, alpha: complex, beta: complex) -> QState:
    """(alpha|0>_1 + beta|1>_1) with all other atoms in |0> and cavities empty."""
    alpha, beta = complex(alpha), complex(beta)
    nrm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"|alpha|^2 + |beta|^2 = {nrm}, must equal 1 within 1e-9")
    space = p.space
    vec = np.zeros(space.dim, dtype=complex)
    ground = [0] * space.n_factors
    vec[space.basis_index(ground)] = alpha
    flipped = list(ground)
    flipped[p.atom_factor(0)] = LVL_1
    vec[space.basis_index(flipped)] = beta
    return QState(space, "pure", vec)


def excitation_number(p: ChainParams) -> QOperator:
    """Conserved total excitation sum_j (n_j + |e>_j<e| + |1>_j<1|)."""
    space = p.space
    total = embed(number_op(p.n_max + 1), p.cavity_factor(0), space).matrix
    for j in range(p.n):
        if j > 0:
            total = total + embed(number_op(p.n_max + 1), p.cavity_factor(j), space).matrix
        total = total + embed(ket_bra(3, LVL_E, LVL_E) + ket_bra(3, LVL_1, LVL_1),
                              p.atom_factor(j), space).matrix
    return QOperator(space, total)


def validity_flags(p: ChainParams) -> dict:
    """Regime checks behind the effective description; '>>' means a factor >= 10."""
    om_max = max((abs(o) for o in p.omega), default=0.0)
    k = 2.0 * np.pi * np.arange(p.n) / p.n
    delta_k = p.delta + 2.0 * p.j_c * np.cos(k)
    g2_over_delta = p.g ** 2 / p.delta if p.delta > 0 else np.inf
    return {
        "delta_gg_g": bool(p.delta >= 10.0 * p.g),
        "g2_over_delta_gg_omega": bool(om_max == 0.0 or g2_over_delta >= 10.0 * om_max),
        "delta_k_gg_g": bool(delta_k.min() >= 10.0 * p.g),
        "delta_k_positive": bool(delta_k.min() > 0.0),
        "kappa_ll_jc": bool(p.kappa == 0.0 or (p.j_c > 0 and p.kappa <= p.j_c / 10.0)),
        "gamma_ll_jc_g2_over_delta2": bool(
            p.gamma == 0.0
            or (p.delta > 0 and p.gamma <= p.j_c * p.g ** 2 / p.delta ** 2 / 10.0)
        ),
    }
