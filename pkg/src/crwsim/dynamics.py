"""Time evolution backends: Schrodinger, Lindblad master equation, MCWF.

Deterministic backends favour exact propagation of the time-independent
generator (spectral decomposition below DENSE_DIM_LIMIT, Lanczos/Krylov
stepping above); a fixed-step 4th-order Runge-Kutta integrator with the
dt = min(0.01/|H|, grid spacing) rule is kept for time-dependent Hamiltonians
and as a step-halving self-check.  The quantum-jump unraveling uses the
norm-threshold method with bisected jump times and per-trajectory RNG
substreams seed + trajectory index, so runs are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chain import ChainParams, LindbladSet, LVL_1, LVL_E
from .operators import QOperator, QState, embed, ket_bra, number_op

SPECTRAL_DIM_LIMIT = 2048     # dense eigendecomposition of H up to here
DENSE_SUPEROP_LIMIT = 48      # dense expm of the superoperator up to dim 48
NORM_DRIFT_TOL = 1e-6


class IntegrationError(RuntimeError):
    """Integrator abort: norm/trace drift beyond tolerance or invalid input."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform output grid on [t0, t1] with n_steps intervals."""

    t0: float
    t1: float
    n_steps: int
    stride: int = 1

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.stride < 1 or self.n_steps % self.stride:
            raise ValueError("stride must be >= 1 and divide n_steps")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_steps + 1)[:: self.stride]

    @property
    def dt_output(self) -> float:
        return (self.t1 - self.t0) / self.n_steps * self.stride


@dataclass
class TrajectoryResult:
    """Time grid plus named observable series (and MCWF standard errors)."""

    times: np.ndarray
    series: dict
    n_traj: int = 1
    stderr: dict | None = None
    metadata: dict = field(default_factory=dict)
    final_state: object = None  # state vector / density matrix at times[-1]

    def __post_init__(self):
        nt = len(self.times)
        for name, vals in self.series.items():
            if len(vals) != nt:
                raise ValueError(f"series {name!r} length {len(vals)} != {nt} time points")

    def to_csv(self, path, extra_metadata: dict | None = None) -> None:
        """CSV: column `t`, one column per observable, then `<name>_stderr`."""
        meta = dict(self.metadata)
        if extra_metadata:
            meta.update(extra_metadata)
        names = list(self.series)
        cols = [self.times] + [np.asarray(self.series[n]) for n in names]
        header_names = ["t"] + names
        if self.stderr:
            for n in names:
                if n in self.stderr:
                    cols.append(np.asarray(self.stderr[n]))
                    header_names.append(f"{n}_stderr")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# crwsim csv v1\n")
            fh.write("# meta = " + json.dumps(meta, sort_keys=True, default=str) + "\n")
            fh.write(",".join(header_names) + "\n")
            for row in zip(*cols):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def check_population_bounds(self, names=None, tol: float = 1e-9) -> None:
        names = list(self.series) if names is None else names
        for n in names:
            vals = np.asarray(self.series[n])
            if vals.min() < -tol or vals.max() > 1.0 + tol:
                raise ValueError(f"population series {n!r} leaves [0, 1] by more than {tol}")


def _dense(mat) -> np.ndarray:
    return mat.toarray() if sp.issparse(mat) else np.asarray(mat)


def _obs_matrices(observables: dict) -> tuple[list, list]:
    names = list(observables)
    mats = [observables[n].matrix if isinstance(observables[n], QOperator) else observables[n]
            for n in names]
    return names, mats


def _expect_vec(mat, psi: np.ndarray) -> float:
    return float(np.vdot(psi, mat @ psi).real)


def _expect_rho(mat, rho: np.ndarray) -> float:
    prod = mat @ rho
    if sp.issparse(prod):
        return float(prod.diagonal().sum().real)
    return float(np.trace(prod).real)


def rk4_default_dt(h_scale: float, grid_dt: float) -> float:
    return min(0.01 / h_scale, grid_dt) if h_scale > 0 else grid_dt


# ---------------------------------------------------------------------------
# pure-state propagation kernels
# ---------------------------------------------------------------------------

def _lanczos_order(h_scale_dt: float) -> int:
    """Krylov order comfortably converged for a step of size |H| dt."""
    return int(np.ceil(3.0 * h_scale_dt)) + 12


def _lanczos_expm_apply(hmat, psi: np.ndarray, dt: float, m: int = 48) -> np.ndarray:
    """exp(-i H dt) psi for Hermitian H via the Lanczos Krylov projection."""
    dim = psi.shape[0]
    m = min(m, dim)
    beta0 = np.linalg.norm(psi)
    if beta0 == 0.0:
        return psi.copy()
    vs = np.empty((m, dim), dtype=complex)
    alphas = np.empty(m)
    betas = np.empty(m)
    vs[0] = psi / beta0
    k = m
    for j in range(m):
        w = hmat @ vs[j]
        alphas[j] = np.vdot(vs[j], w).real
        w = w - alphas[j] * vs[j]
        if j > 0:
            w = w - betas[j - 1] * vs[j - 1]
        b = np.linalg.norm(w)
        if j + 1 == m or b < 1e-14 * max(1.0, abs(alphas[j])):
            k = j + 1
            break
        betas[j] = b
        vs[j + 1] = w / b
    tmat = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1) + np.diag(betas[: k - 1], -1)
    w_t, v_t = np.linalg.eigh(tmat)
    small = v_t @ (np.exp(-1j * w_t * dt) * v_t[0].conj())
    return beta0 * (vs[:k].T @ small)


def _krylov_evolve_interval(hmat, psi: np.ndarray, dt: float, h_scale: float) -> np.ndarray:
    n_sub = max(1, int(np.ceil(h_scale * abs(dt) / 10.0)))
    sub = dt / n_sub
    for _ in range(n_sub):
        psi = _lanczos_expm_apply(hmat, psi, sub)
    return psi


def evolve_schrodinger(H: QOperator, psi0: QState, grid: TimeGrid, observables: dict,
                       method: str = "auto", dt: float | None = None) -> TrajectoryResult:
    """Evolve a pure state under a time-independent Hamiltonian.

    method 'spectral' diagonalizes H once and is exact at every output time;
    'krylov' steps with a Lanczos exponential (default above the dense limit);
    'rk4' is the fixed-step self-check integrator.
    """
    if psi0.kind != "pure":
        raise IntegrationError("Schrodinger backend needs a pure state")
    if H.space != psi0.space:
        raise IntegrationError("Hamiltonian and state spaces differ")
    if not H.is_hermitian(1e-10):
        raise IntegrationError("Hamiltonian is not Hermitian")
    dim = H.dim
    if method == "auto":
        method = "spectral" if dim <= SPECTRAL_DIM_LIMIT else "krylov"
    names, mats = _obs_matrices(observables)
    times = grid.times
    psi0v = psi0.data
    out = np.empty((len(times), len(names)))

    if method == "spectral":
        w, v = np.linalg.eigh(_dense(H.matrix))
        coeff = v.conj().T @ psi0v
        for i, t in enumerate(times):
            psi = v @ (np.exp(-1j * w * (t - grid.t0)) * coeff)
            out[i] = [_expect_vec(m, psi) for m in mats]
        psi_last = psi
    elif method == "krylov":
        h_scale = H.norm_scale()
        psi = psi0v.copy()
        out[0] = [_expect_vec(m, psi) for m in mats]
        for i in range(1, len(times)):
            psi = _krylov_evolve_interval(H.matrix, psi, times[i] - times[i - 1], h_scale)
            out[i] = [_expect_vec(m, psi) for m in mats]
        psi_last = psi
    elif method == "rk4":
        hmat = H.matrix
        dt_step = dt if dt is not None else rk4_default_dt(H.norm_scale(), grid.dt_output)
        psi = psi0v.copy()
        out[0] = [_expect_vec(m, psi) for m in mats]
        for i in range(1, len(times)):
            psi = _rk4_segment(lambda t, y: -1j * (hmat @ y), psi, times[i - 1], times[i], dt_step)
            drift = abs(np.linalg.norm(psi) - 1.0)
            if drift > NORM_DRIFT_TOL:
                raise IntegrationError(
                    f"norm drift {drift:.2e} beyond {NORM_DRIFT_TOL} at t={times[i]:g}; "
                    "reduce dt or use the spectral backend"
                )
            out[i] = [_expect_vec(m, psi) for m in mats]
        psi_last = psi
    else:
        raise ValueError(f"unknown method {method!r}")

    drift = abs(np.linalg.norm(psi_last) - 1.0)
    if drift > NORM_DRIFT_TOL:
        raise IntegrationError(f"final norm drift {drift:.2e} beyond {NORM_DRIFT_TOL}")
    series = {n: out[:, i].copy() for i, n in enumerate(names)}
    meta = {"backend": "schrodinger", "method": method}
    if method == "rk4":
        meta["dt"] = dt_step
    return TrajectoryResult(times=times, series=series, metadata=meta, final_state=psi_last)


def _rk4_segment(rhs, y, t0: float, t1: float, dt: float):
    n = max(1, int(np.ceil((t1 - t0) / dt - 1e-12)))
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def evolve_schrodinger_td(h_func, psi0: QState, grid: TimeGrid, observables: dict,
                          dt: float | None = None, method: str = "expm") -> TrajectoryResult:
    """Evolve under a time-dependent Hamiltonian h_func(t) -> matrix.

    'expm' applies the midpoint exponential per substep (unitary by
    construction); 'rk4' is the fixed-step alternative.  dt controls the
    substep; default keeps the midpoint rule well converged for drives that
    vary slowly against the substep.
    """
    if psi0.kind != "pure":
        raise IntegrationError("Schrodinger backend needs a pure state")
    names, mats = _obs_matrices(observables)
    times = grid.times
    h0 = h_func(times[0])
    dim = psi0.data.shape[0]
    h_scale = QOperator(psi0.space, h0).norm_scale()
    if dt is None:
        if method == "rk4":
            dt = rk4_default_dt(h_scale, grid.dt_output)
        elif h_scale > 0:
            # midpoint-exponential substep: short against 1/|H|, but capped
            # at 20k substeps total since its error budget is set by how fast
            # the drive varies, not by |H| dt
            dt = max(min(grid.dt_output, 0.5 / h_scale), (grid.t1 - grid.t0) / 20000.0)
        else:
            dt = grid.dt_output
    out = np.empty((len(times), len(names)))
    psi = psi0.data.copy()
    out[0] = [_expect_vec(m, psi) for m in mats]
    dense_expm = dim <= 64
    krylov_m = _lanczos_order(h_scale * dt)
    for i in range(1, len(times)):
        ta, tb = times[i - 1], times[i]
        n_sub = max(1, int(np.ceil((tb - ta) / dt - 1e-12)))
        h = (tb - ta) / n_sub
        if method == "expm":
            for s_i in range(n_sub):
                tm = ta + (s_i + 0.5) * h
                hm = h_func(tm)
                if dense_expm and not sp.issparse(hm):
                    w, v = np.linalg.eigh(hm)
                    psi = v @ (np.exp(-1j * w * h) * (v.conj().T @ psi))
                else:
                    psi = _lanczos_expm_apply(hm, psi, h, m=krylov_m)
        elif method == "rk4":
            psi = _rk4_segment(lambda t, y: -1j * (h_func(t) @ y), psi, ta, tb, h)
        else:
            raise ValueError(f"unknown method {method!r}")
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > NORM_DRIFT_TOL:
            raise IntegrationError(f"norm drift {drift:.2e} at t={tb:g}; reduce dt")
        out[i] = [_expect_vec(m, psi) for m in mats]
    series = {n: out[:, i].copy() for i, n in enumerate(names)}
    return TrajectoryResult(times=times, series=series, final_state=psi,
                            metadata={"backend": "schrodinger_td", "method": method, "dt": dt})


# ---------------------------------------------------------------------------
# master equation
# ---------------------------------------------------------------------------

def liouvillian_matrix(H: QOperator, lindblad: LindbladSet, sparse: bool):
    """Superoperator generator acting on the row-major vectorization of rho."""
    if sparse:
        eye = sp.identity(H.dim, dtype=complex, format="csr")
        kron = lambda a, b: sp.kron(a, b, format="csr")
        hmat = sp.csr_matrix(H.matrix)
        l_mats = [sp.csr_matrix(L.matrix) for L in lindblad]
    else:
        eye = np.eye(H.dim, dtype=complex)
        kron = np.kron
        hmat = _dense(H.matrix)
        l_mats = [_dense(L.matrix) for L in lindblad]
    sup = -1j * (kron(hmat, eye) - kron(eye, hmat.T))
    for L in l_mats:
        ldl = L.conj().T @ L
        sup = sup + kron(L, L.conj()) - 0.5 * kron(ldl, eye) - 0.5 * kron(eye, ldl.T)
    return sup


def _lindblad_rhs(hmat, l_mats, ldl_sum):
    def rhs(_t, rho):
        out = -1j * (hmat @ rho - rho @ hmat)
        out -= 0.5 * (ldl_sum @ rho + rho @ ldl_sum)
        for L in l_mats:
            out += L @ rho @ L.conj().T
        return out
    return rhs


def evolve_lindblad(H: QOperator, lindblad: LindbladSet, rho0: QState, grid: TimeGrid,
                    observables: dict, method: str = "auto", dt: float | None = None) -> TrajectoryResult:
    """Integrate drho/dt = -i[H, rho] + sum_i D[L_i] rho.

    Paths: 'unitary' (empty jump set, spectral and exact), 'dense_expm'
    (one dense expm of the superoperator per output spacing), 'krylov'
    (sparse superoperator with Krylov expm application), 'rk4'.
    Hermiticity is enforced by symmetrization at every output step; trace
    drift beyond 1e-6 aborts.
    """
    rho = rho0.to_density().data.copy()
    dim = H.dim
    if method == "auto":
        if len(lindblad) == 0:
            method = "unitary"
        elif dim <= DENSE_SUPEROP_LIMIT:
            method = "dense_expm"
        else:
            method = "krylov"
    names, mats = _obs_matrices(observables)
    times = grid.times
    out = np.empty((len(times), len(names)))

    def record(i, rho):
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > NORM_DRIFT_TOL:
            raise IntegrationError(f"trace drift {abs(tr - 1.0):.2e} at output {i}")
        out[i] = [_expect_rho(m, rho) for m in mats]
        return rho

    if method == "unitary":
        if len(lindblad):
            raise ValueError("'unitary' path requires an empty jump set")
        w, v = np.linalg.eigh(_dense(H.matrix))
        w_rot = v.conj().T @ rho @ v
        gaps = w[:, None] - w[None, :]
        for i, t in enumerate(times):
            rho_t = v @ (np.exp(-1j * gaps * (t - grid.t0)) * w_rot) @ v.conj().T
            rho_t = record(i, rho_t)
        rho = rho_t
    elif method == "dense_expm":
        sup = liouvillian_matrix(H, lindblad, sparse=False)
        step = sla.expm(sup * grid.dt_output)
        vec = rho.reshape(-1)
        rho = record(0, rho)
        for i in range(1, len(times)):
            vec = step @ vec
            rho = record(i, vec.reshape(dim, dim))
            vec = rho.reshape(-1)
    elif method == "krylov":
        sup = liouvillian_matrix(H, lindblad, sparse=True)
        vec = rho.reshape(-1)
        rho = record(0, rho)
        # chunk the grid so expm_multiply never materializes a huge block
        chunk = max(2, int(2e7 / (dim * dim)))
        i = 1
        while i < len(times):
            j = min(i + chunk - 1, len(times) - 1)
            block = spla.expm_multiply(sup, vec, start=0.0, stop=times[j] - times[i - 1],
                                       num=j - i + 2, endpoint=True)
            for b, idx in enumerate(range(i, j + 1), start=1):
                rho = record(idx, block[b].reshape(dim, dim))
            vec = rho.reshape(-1)
            i = j + 1
    elif method == "rk4":
        hmat = _dense(H.matrix)
        l_mats = [_dense(L.matrix) for L in lindblad]
        ldl_sum = sum((L.conj().T @ L for L in l_mats), np.zeros((dim, dim), dtype=complex))
        rhs = _lindblad_rhs(hmat, l_mats, ldl_sum)
        h_scale = H.norm_scale() + float(np.abs(ldl_sum).max())
        dt_step = dt if dt is not None else rk4_default_dt(h_scale, grid.dt_output)
        rho = record(0, rho)
        for i in range(1, len(times)):
            rho = _rk4_segment(rhs, rho, times[i - 1], times[i], dt_step)
            rho = record(i, rho)
    else:
        raise ValueError(f"unknown method {method!r}")

    series = {n: out[:, i].copy() for i, n in enumerate(names)}
    return TrajectoryResult(times=times, series=series, final_state=rho,
                            metadata={"backend": "lindblad", "method": method})


# ---------------------------------------------------------------------------
# Monte Carlo wave function
# ---------------------------------------------------------------------------

def _heff_propagator(H: QOperator, lindblad: LindbladSet):
    """Spectral factors of the non-Hermitian H_eff = H - (i/2) sum L^dag L."""
    heff = _dense(H.matrix).astype(complex).copy()
    for L in lindblad:
        lm = _dense(L.matrix)
        heff -= 0.5j * (lm.conj().T @ lm)
    w, v = sla.eig(heff)
    vinv = np.linalg.inv(v)
    return w, v, vinv


def _mcwf_trajectory(w, v, vinv, l_mats, obs_mats, times, psi0, rng, jump_tol):
    def prop(psi, s):
        return v @ (np.exp(-1j * w * s) * (vinv @ psi))

    n_obs = len(obs_mats)
    out = np.empty((len(times), n_obs))
    psi = psi0.copy()  # unnormalized between jumps; norm^2 = survival prob
    r = rng.random()
    out[0] = [_expect_vec(m, psi) for m in obs_mats]
    for i in range(1, len(times)):
        t_left = times[i] - times[i - 1]
        while t_left > 0.0:
            trial = prop(psi, t_left)
            if np.vdot(trial, trial).real > r:
                psi = trial
                break
            # jump inside this window: the squared norm decays monotonically,
            # bisect the crossing time to 1e-3 relative
            lo, hi = 0.0, t_left
            while hi - lo > jump_tol * hi:
                mid = 0.5 * (lo + hi)
                trial_mid = prop(psi, mid)
                if np.vdot(trial_mid, trial_mid).real > r:
                    lo = mid
                else:
                    hi = mid
            tau = 0.5 * (lo + hi)
            psi_j = prop(psi, tau)
            psi_j /= np.linalg.norm(psi_j)
            weights = np.array([np.linalg.norm(L @ psi_j) ** 2 for L in l_mats])
            total = weights.sum()
            if total <= 0.0:  # no decay channel open; resume coherent evolution
                psi = psi_j
                r = rng.random()
                t_left -= tau
                continue
            pick = rng.random() * total
            ch = int(np.searchsorted(np.cumsum(weights), pick))
            ch = min(ch, len(l_mats) - 1)
            psi = l_mats[ch] @ psi_j
            psi /= np.linalg.norm(psi)
            r = rng.random()
            t_left -= tau
        nrm2 = np.vdot(psi, psi).real
        out[i] = [_expect_vec(m, psi) / nrm2 for m in obs_mats]
    return out, psi / np.linalg.norm(psi)


def _mcwf_batch(args):
    (w, v, vinv, l_mats, obs_mats, times, psi0, seed, indices, jump_tol) = args
    block = np.empty((len(indices), len(times), len(obs_mats)))
    rho_sum = np.zeros((psi0.shape[0], psi0.shape[0]), dtype=complex)
    for b, idx in enumerate(indices):
        rng = np.random.default_rng(seed + idx)
        block[b], psi_f = _mcwf_trajectory(w, v, vinv, l_mats, obs_mats, times, psi0, rng, jump_tol)
        rho_sum += np.outer(psi_f, psi_f.conj())
    return block, rho_sum


def evolve_mcwf(H: QOperator, lindblad: LindbladSet, psi0: QState, grid: TimeGrid,
                n_traj: int, seed: int, observables: dict,
                n_jobs: int = 1, jump_tol: float = 1e-3) -> TrajectoryResult:
    """Quantum-jump unraveling of the master equation.

    Trajectory i draws from numpy's default generator seeded with
    seed + i, so results are independent of execution order and identical
    across reruns with the same seed.  Observable series are trajectory means;
    stderr holds the standard error of the mean per output time.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if psi0.kind != "pure":
        raise IntegrationError("MCWF backend needs a pure initial state")
    if H.dim > SPECTRAL_DIM_LIMIT:
        raise IntegrationError(
            f"MCWF spectral propagation capped at dimension {SPECTRAL_DIM_LIMIT}"
        )
    names, mats = _obs_matrices(observables)
    obs_mats = [_dense(m) for m in mats]
    l_mats = [_dense(L.matrix) for L in lindblad]
    w, v, vinv = _heff_propagator(H, lindblad)
    times = grid.times

    indices = list(range(n_traj))
    if n_jobs > 1 and n_traj > 1:
        from concurrent.futures import ProcessPoolExecutor
        chunks = [indices[i::n_jobs] for i in range(n_jobs)]
        chunks = [c for c in chunks if c]
        args = [(w, v, vinv, l_mats, obs_mats, times, psi0.data, seed, c, jump_tol)
                for c in chunks]
        all_series = np.empty((n_traj, len(times), len(names)))
        rho_final = np.zeros((H.dim, H.dim), dtype=complex)
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            for chunk, (block, rho_sum) in zip(chunks, pool.map(_mcwf_batch, args)):
                for b, idx in enumerate(chunk):
                    all_series[idx] = block[b]
                rho_final += rho_sum
    else:
        all_series, rho_final = _mcwf_batch((w, v, vinv, l_mats, obs_mats, times,
                                             psi0.data, seed, indices, jump_tol))
    rho_final = rho_final / n_traj

    mean = all_series.mean(axis=0)
    series = {n: mean[:, i].copy() for i, n in enumerate(names)}
    stderr = None
    if n_traj > 1:
        sem = all_series.std(axis=0, ddof=1) / np.sqrt(n_traj)
        stderr = {n: sem[:, i].copy() for i, n in enumerate(names)}
    return TrajectoryResult(
        times=times, series=series, n_traj=n_traj, stderr=stderr, final_state=rho_final,
        metadata={"backend": "mcwf", "n_traj": n_traj, "seed": seed, "jump_tol": jump_tol},
    )


# ---------------------------------------------------------------------------
# standard observables of the chain
# ---------------------------------------------------------------------------

def standard_observables(p: ChainParams) -> dict:
    """Named operators tracked in transfer runs.

    pop_one_j: projector onto the collective state with the logical |1> at
    node j (all other atoms in |0>, cavities empty); pop_ground: projector
    onto the global ground state; pop_excited / pop_photon: summed upper-state
    population and photon number (the leakage channels).
    """
    space = p.space
    obs: dict[str, QOperator] = {}
    ground = [0] * space.n_factors
    for j in range(p.n):
        occ = list(ground)
        occ[p.atom_factor(j)] = LVL_1
        idx = space.basis_index(occ)
        proj = sp.csr_matrix(([1.0 + 0j], ([idx], [idx])), shape=(space.dim, space.dim))
        obs[f"pop_one_{j + 1}"] = QOperator(space, proj)
    idx0 = space.basis_index(ground)
    obs["pop_ground"] = QOperator(
        space, sp.csr_matrix(([1.0 + 0j], ([idx0], [idx0])), shape=(space.dim, space.dim))
    )
    pe = embed(ket_bra(3, LVL_E, LVL_E), p.atom_factor(0), space).matrix
    nph = embed(number_op(p.n_max + 1), p.cavity_factor(0), space).matrix
    for j in range(1, p.n):
        pe = pe + embed(ket_bra(3, LVL_E, LVL_E), p.atom_factor(j), space).matrix
        nph = nph + embed(number_op(p.n_max + 1), p.cavity_factor(j), space).matrix
    obs["pop_excited"] = QOperator(space, pe)
    obs["pop_photon"] = QOperator(space, nph)
    return obs
