"""Experiment pipelines: transfer runs, exact-vs-effective comparisons,
fidelity scans over the chain length, and STIRAP runs, with CSV/JSON output.

Every emitted file carries a metadata header with the fully resolved
configuration, seeds and integrator settings, so deterministic runs can be
reproduced bit-identically from the file alone.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .chain import (
    ChainParams,
    build_hamiltonian,
    build_hamiltonian_parts,
    build_lindblad,
    initial_transfer_state,
    validity_flags,
)
from .config import ExperimentConfig
from .dynamics import (
    TimeGrid,
    TrajectoryResult,
    evolve_lindblad,
    evolve_mcwf,
    evolve_schrodinger,
    evolve_schrodinger_td,
    standard_observables,
)
from .effective import (
    effective_evolution,
    effective_model,
    raman_rate,
    stark_shifts,
)
from .operators import QState, partial_trace
from .stirap import run_stirap

LINDBLAD_DIM_BUDGET = 500

# paper-quoted reference points for the hardware scan at N = 100
CLAIMED_F_N100 = 0.88
CLAIMED_TF_N100_US = 0.01


class ExperimentError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# fidelity of the retrieved qubit
# ---------------------------------------------------------------------------

def transfer_fidelity(rho_f, alpha: complex, beta: complex,
                      apply_gate: bool = True, frame_phase: float = 0.0) -> float:
    """Overlap of the retrieved end-atom qubit with the target state.

    rho_f is a 2x2 density matrix on the {|0>, |1>} sector of the last atom
    (subnormalized trace is allowed: leakage into |e> simply costs fidelity).
    apply_gate applies the receiving node's diag(1, i) phase gate; frame_phase
    adds the calibrated rotating-frame correction diag(1, e^{i phi}).
    """
    rho = rho_f.data if isinstance(rho_f, QState) else np.asarray(rho_f, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 density matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > 1e-8:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if tr > 1.0 + 1e-9 or tr < -1e-9:
        raise ValueError(f"density matrix trace {tr} outside [0, 1]")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-8:
        raise ValueError("density matrix has a negative eigenvalue")
    nrm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("(alpha, beta) must be normalized")
    u1 = np.exp(1j * frame_phase) * (1j if apply_gate else 1.0)
    psi_p = np.array([alpha, beta], dtype=complex)
    rho_g = rho.copy()
    rho_g[0, 1] *= np.conj(u1)
    rho_g[1, 0] *= u1
    return float(np.vdot(psi_p, rho_g @ psi_p).real)


def reduce_to_end_qubit(state, p: ChainParams) -> np.ndarray:
    """Reduced 2x2 density matrix of the last atom's {|0>, |1>} sector.

    Accepts a QState or a raw vector/density matrix on the full chain space.
    The |e> row/column is dropped without renormalizing, so upper-state
    leakage shows up as a trace deficit.
    """
    if not isinstance(state, QState):
        arr = np.asarray(state)
        kind = "pure" if arr.ndim == 1 else "density"
        state = QState(p.space, kind, arr)
    reduced = partial_trace(state, [p.atom_factor(p.n - 1)])
    return reduced.data[:2, :2].copy()


def _auto_frame_phase(rho2: np.ndarray, alpha: complex, beta: complex) -> float:
    """Channel-phase calibration: the gate phase that aligns the retrieved
    coherence with the target, i.e. the deterministic frame rotation of the
    transfer channel measured from the run itself."""
    coh = rho2[1, 0]
    ref = beta * np.conj(alpha)
    if abs(coh) < 1e-15 or abs(ref) < 1e-15:
        return 0.0
    # after diag(1, i e^{i phi}) the coherence picks up i e^{i phi}
    return float(np.angle(ref) - np.angle(coh) - 0.5 * np.pi)


def model_frame_phase(p: ChainParams, t: float, ramp_time: float = 0.0) -> float:
    """Frame phase predicted by the closed-form level shift of the stored qubit.

    The driven |1> states are shifted by the common second-order light shift
    while the global ground state is not; a sin^2 turn-on ramp accrues 3/8 of
    the shift over the ramp window.
    """
    s1, _ = stark_shifts(p)
    t_eff = t - ramp_time * (1.0 - 3.0 / 8.0)
    return float((s1 * t_eff) % (2.0 * np.pi))


# ---------------------------------------------------------------------------
# shared evolution plumbing
# ---------------------------------------------------------------------------

def _ramp_scale(t, ramp_time: float):
    if ramp_time <= 0:
        return 1.0
    return np.sin(0.5 * np.pi * min(t, ramp_time) / ramp_time) ** 2


def _evolve_exact(cfg: ExperimentConfig, p: ChainParams, grid: TimeGrid,
                  observables: dict) -> TrajectoryResult:
    """Run the configured exact backend from the standard transfer state."""
    psi0 = initial_transfer_state(p, cfg.alpha, cfg.beta)
    backend = cfg.backend
    if backend == "schrodinger":
        if cfg.ramp_time > 0:
            return _schrodinger_with_ramp(p, psi0, grid, observables, cfg.ramp_time)
        return evolve_schrodinger(build_hamiltonian(p), psi0, grid, observables)
    if backend == "lindblad":
        if cfg.ramp_time > 0:
            raise ExperimentError("laser ramp is only supported on the schrodinger backend")
        if p.space.dim > LINDBLAD_DIM_BUDGET:
            raise ExperimentError(
                f"master-equation backend capped at dimension {LINDBLAD_DIM_BUDGET} "
                f"(requested {p.space.dim}); use the mcwf backend instead"
            )
        return evolve_lindblad(build_hamiltonian(p), build_lindblad(p),
                               psi0.to_density(), grid, observables)
    if backend == "mcwf":
        if cfg.ramp_time > 0:
            raise ExperimentError("laser ramp is only supported on the schrodinger backend")
        return evolve_mcwf(build_hamiltonian(p), build_lindblad(p), psi0, grid,
                           cfg.n_traj, cfg.seed, observables, n_jobs=cfg.n_jobs)
    raise ExperimentError(f"backend {backend!r} is not an exact-dynamics backend")


def _schrodinger_with_ramp(p: ChainParams, psi0: QState, grid: TimeGrid,
                           observables: dict, ramp_time: float) -> TrajectoryResult:
    """sin^2 laser turn-on over ramp_time, then exact static propagation.

    A sudden quench rings the leakage amplitudes at twice their adiabatic
    value; the smooth turn-on keeps the residual excited/photon populations
    at the adiabatic floor.
    """
    times = grid.times
    h_static, drives = build_hamiltonian_parts(p)
    # sparse storage keeps the ramp stepper's Krylov matvecs cheap
    import scipy.sparse as sp
    h0 = sp.csr_matrix(h_static.matrix)
    drive_pairs = []
    for j, om in enumerate(p.omega):
        if om != 0:
            d = sp.csr_matrix(drives[j].matrix)
            drive_pairs.append(om * d + np.conj(om) * d.conj().T)

    def h_func(t):
        s = _ramp_scale(t, ramp_time)
        h = h0
        for term in drive_pairs:
            h = h + s * term
        return h

    dt_out = grid.dt_output
    i_split = min(int(np.ceil(ramp_time / dt_out - 1e-12)), grid.times.size - 1)
    if i_split < 1:
        i_split = 1
    grid_a = TimeGrid(times[0], times[i_split], i_split)
    res_a = evolve_schrodinger_td(h_func, psi0, grid_a, observables)
    psi_mid = QState(p.space, "pure", res_a.final_state / np.linalg.norm(res_a.final_state))
    if i_split == grid.times.size - 1:
        return res_a
    grid_b = TimeGrid(times[i_split], times[-1], grid.times.size - 1 - i_split)
    res_b = evolve_schrodinger(build_hamiltonian(p), psi_mid, grid_b, observables)
    series = {k: np.concatenate([res_a.series[k], res_b.series[k][1:]])
              for k in res_a.series}
    meta = dict(res_b.metadata)
    meta.update({"ramp_time": ramp_time, "ramp_method": res_a.metadata.get("method"),
                 "ramp_dt": res_a.metadata.get("dt")})
    return TrajectoryResult(times=times, series=series, metadata=meta,
                            final_state=res_b.final_state)


def _leakage(result: TrajectoryResult) -> np.ndarray:
    return np.asarray(result.series["pop_excited"]) + np.asarray(result.series["pop_photon"])


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _run_metadata(cfg: ExperimentConfig, extra: dict | None = None) -> dict:
    meta = {"artifact": f"crwsim {__version__}", "config": cfg.resolved_dict()}
    if extra:
        meta.update(extra)
    return meta


def _maybe_plot(cfg: ExperimentConfig, result: TrajectoryResult, stem: str,
                series_names=None) -> None:
    if not cfg.plots:
        return
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = series_names or list(result.series)
    fig, ax = plt.subplots(figsize=(7, 4))
    for n in names:
        ax.plot(result.times, result.series[n], label=n)
    ax.set_xlabel("t [1/g]")
    ax.set_ylabel("population")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(os.path.join(cfg.out_dir, f"{stem}.svg"))
    plt.close(fig)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _transfer_scales(p: ChainParams) -> tuple[complex, float | None]:
    """(Theta_r, t_f); t_f is None for an undriven chain."""
    theta = raman_rate(p, warn_regime=False)
    t_f = float(np.pi / (2.0 * abs(theta))) if theta != 0 else None
    return theta, t_f


def _default_grid(cfg: ExperimentConfig, t_f: float | None) -> TimeGrid:
    if cfg.grid is not None:
        return cfg.grid
    if t_f is None:
        raise ExperimentError("grid is required when Theta_r = 0 (no transfer time scale)")
    return TimeGrid(0.0, t_f, 1200)


def run_compare(cfg: ExperimentConfig) -> dict:
    """Exact-backend and closed-form transfer curves on a shared grid,
    plus a deviation summary (max/mean population difference, peak leakage)."""
    p = cfg.chain
    theta_r, t_f = _transfer_scales(p)
    grid = _default_grid(cfg, t_f)
    obs = standard_observables(p)
    exact = _evolve_exact(cfg, p, grid, obs)
    exact.check_population_bounds([k for k in exact.series if k.startswith("pop_one")])

    beta2 = abs(cfg.beta) ** 2
    c0, c1, cn = effective_evolution(cfg.alpha, cfg.beta, theta_r, exact.times)
    eff_first = np.abs(c1) ** 2
    eff_last = np.abs(cn) ** 2
    name_first, name_last = "pop_one_1", f"pop_one_{p.n}"
    d_first = np.abs(np.asarray(exact.series[name_first]) - eff_first)
    d_last = np.abs(np.asarray(exact.series[name_last]) - eff_last)
    leak = _leakage(exact)
    i_half = int(np.argmin(np.asarray(exact.series[name_first])))

    summary = {
        "theta_r_abs": abs(theta_r),
        "t_f": t_f,
        "beta_sq": beta2,
        "max_abs_deviation": float(max(d_first.max(), d_last.max())),
        "mean_abs_deviation": float(0.5 * (d_first.mean() + d_last.mean())),
        "peak_leakage": float(leak.max()),
        "pop_first_at_end": float(np.asarray(exact.series[name_first])[-1]),
        "pop_last_at_end": float(np.asarray(exact.series[name_last])[-1]),
        "measured_half_period": float(exact.times[i_half]),
        "backend": exact.metadata,
        "validity_flags": validity_flags(p),
    }

    os.makedirs(cfg.out_dir, exist_ok=True)
    meta = _run_metadata(cfg, {"summary": {k: v for k, v in summary.items()
                                           if not isinstance(v, dict)}})
    if cfg.write_csv:
        exact.to_csv(os.path.join(cfg.out_dir, "compare_exact.csv"), meta)
        eff = TrajectoryResult(
            times=exact.times,
            series={name_first: eff_first, name_last: eff_last,
                    "pop_ground": np.full_like(eff_first, abs(cfg.alpha) ** 2)},
            metadata={"backend": "effective"},
        )
        eff.to_csv(os.path.join(cfg.out_dir, "compare_effective.csv"), meta)
    _write_json(os.path.join(cfg.out_dir, "compare_summary.json"),
                {"meta": meta, "summary": summary})
    _maybe_plot(cfg, exact, "compare_exact", [name_first, name_last, "pop_excited", "pop_photon"])
    return summary


def run_transfer(cfg: ExperimentConfig) -> dict:
    """Full pipeline: evolve to the grid end, reduce to the last atom, apply
    the recovery gate (with the configured frame calibration) and report
    fidelities alongside the population curves."""
    p = cfg.chain
    theta_r, t_f = _transfer_scales(p)
    grid = _default_grid(cfg, t_f)

    if cfg.backend == "effective":
        c0, c1, cn = effective_evolution(cfg.alpha, cfg.beta, theta_r, grid.t1)
        rho2 = np.outer(np.array([c0, cn]), np.array([c0, cn]).conj())
        times = grid.times
        c0s, c1s, cns = effective_evolution(cfg.alpha, cfg.beta, theta_r, times)
        result = TrajectoryResult(
            times=times,
            series={"pop_one_1": np.abs(c1s) ** 2, f"pop_one_{p.n}": np.abs(cns) ** 2,
                    "pop_ground": np.abs(c0s) ** 2},
            metadata={"backend": "effective"},
        )
    else:
        obs = standard_observables(p)
        result = _evolve_exact(cfg, p, grid, obs)
        rho2 = reduce_to_end_qubit(result.final_state, p)

    phases = {
        "none": 0.0,
        "model": model_frame_phase(p, grid.t1 - grid.t0, cfg.ramp_time)
                 if cfg.backend != "effective" else 0.0,
        "auto": _auto_frame_phase(rho2, cfg.alpha, cfg.beta),
    }
    fidelities = {
        name: transfer_fidelity(rho2, cfg.alpha, cfg.beta, cfg.apply_gate, ph)
        for name, ph in phases.items()
    }
    try:
        f_est = effective_model(p, cfg.omega_k_convention).f_est
    except ValueError:
        f_est = None
    report = {
        "fidelity": fidelities[cfg.gate_calibration],
        "gate_calibration": cfg.gate_calibration,
        "fidelities": fidelities,
        "frame_phases": phases,
        "theta_r_abs": abs(theta_r),
        "t_f": t_f,
        "t_evolved": grid.t1 - grid.t0,
        "end_qubit_trace": float(np.trace(rho2).real),
        "f_est_closed_form": f_est,
        "backend": result.metadata,
    }
    os.makedirs(cfg.out_dir, exist_ok=True)
    meta = _run_metadata(cfg)
    if cfg.write_csv:
        result.to_csv(os.path.join(cfg.out_dir, "transfer_curves.csv"), meta)
    _write_json(os.path.join(cfg.out_dir, "transfer_report.json"),
                {"meta": meta, "report": report})
    _maybe_plot(cfg, result, "transfer_curves")
    return report


@dataclass
class FidelityReport:
    """Per-length closed-form transfer budget, plus the hardware-point
    comparison against the quoted reference values when applicable."""

    rows: list = field(default_factory=list)
    comparison: dict | None = None

    def to_dict(self) -> dict:
        return {"rows": self.rows, "comparison": self.comparison}

    def to_text(self) -> str:
        head = f"{'N':>4} {'Theta_r':>12} {'t_f':>12} {'Gamma_E':>12} {'Gamma_C':>12} {'F_est':>8} flags"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            flags = "" if r["regime_ok"] else " REGIME-INVALID"
            est = "" if r["estimate_valid"] else " est-clamped"
            lines.append(
                f"{r['n']:>4} {r['theta_r_abs']:>12.5e} {r['t_f']:>12.5e} "
                f"{r['gamma_e']:>12.5e} {r['gamma_c']:>12.5e} {r['f_est']:>8.4f}{flags}{est}"
            )
        if self.comparison:
            c = self.comparison
            lines += [
                "",
                f"reference point N={c['n']}:",
                f"  computed F = {c['computed_f']:.4f}   quoted ~{c['claimed_f']:.2f}"
                f"   agree(<0.02): {c['f_agrees']}",
            ]
            if c.get("computed_tf_us") is not None:
                lines.append(
                    f"  computed t_f = {c['computed_tf_us']:.4g} us   quoted ~{c['claimed_tf_us']:g} us"
                    f"   agree(<x2): {c['tf_agrees']}"
                )
            else:
                lines.append("  t_f in physical units needs chain.g_physical")
        return "\n".join(lines)


def run_fidelity_scan(cfg: ExperimentConfig) -> FidelityReport:
    """Closed-form (t_f, F_est) rows for each chain length in the scan."""
    if not cfg.scan_n:
        raise ExperimentError("fidelity scan needs a nonempty scan list")
    base = cfg.chain
    om1, omN = base.omega[0], base.omega[-1]
    rows = []
    for n in cfg.scan_n:
        omega = [0.0] * n
        omega[0], omega[-1] = om1, omN
        p = base.replace(n=n, omega=tuple(omega))
        flags = validity_flags(p)
        row = {"n": n, "regime_ok": flags["delta_k_positive"], **{f"flag_{k}": v for k, v in flags.items()}}
        try:
            m = effective_model(p, cfg.omega_k_convention)
            row.update(theta_r_abs=abs(m.theta_r), t_f=m.t_f, gamma_e=m.gamma_e,
                       gamma_c=m.gamma_c, f_est=m.f_est, estimate_valid=m.estimate_valid)
        except ValueError as exc:  # flagged, not dropped
            row.update(theta_r_abs=float("nan"), t_f=float("nan"), gamma_e=float("nan"),
                       gamma_c=float("nan"), f_est=float("nan"), estimate_valid=False,
                       regime_ok=False, error=str(exc))
        rows.append(row)

    comparison = None
    if 100 in cfg.scan_n:
        row100 = next(r for r in rows if r["n"] == 100)
        tf_us = None
        tf_agrees = None
        if cfg.g_angular is not None and np.isfinite(row100["t_f"]):
            tf_us = row100["t_f"] / cfg.g_angular * 1e6
            tf_agrees = bool(0.5 <= tf_us / CLAIMED_TF_N100_US <= 2.0)
        comparison = {
            "n": 100,
            "computed_f": row100["f_est"],
            "claimed_f": CLAIMED_F_N100,
            "f_agrees": bool(abs(row100["f_est"] - CLAIMED_F_N100) <= 0.02),
            "computed_tf_us": tf_us,
            "claimed_tf_us": CLAIMED_TF_N100_US,
            "tf_agrees": tf_agrees,
        }

    report = FidelityReport(rows=rows, comparison=comparison)
    os.makedirs(cfg.out_dir, exist_ok=True)
    meta = _run_metadata(cfg)
    _write_json(os.path.join(cfg.out_dir, "fidelity_scan.json"),
                {"meta": meta, "report": report.to_dict()})
    if cfg.write_csv:
        keys = ["n", "theta_r_abs", "t_f", "gamma_e", "gamma_c", "f_est"]
        with open(os.path.join(cfg.out_dir, "fidelity_scan.csv"), "w", encoding="utf-8") as fh:
            fh.write("# crwsim csv v1\n")
            fh.write("# meta = " + json.dumps(meta, sort_keys=True, default=str) + "\n")
            fh.write(",".join(keys + ["regime_ok", "estimate_valid"]) + "\n")
            for r in rows:
                vals = [f"{r[k]:.17g}" if isinstance(r[k], float) else str(r[k]) for k in keys]
                fh.write(",".join(vals + [str(r["regime_ok"]), str(r["estimate_valid"])]) + "\n")
    return report


def run_stirap_experiment(cfg: ExperimentConfig) -> dict:
    """Pulsed adiabatic transfer with the configured schedule."""
    if cfg.schedule is None:
        raise ExperimentError("stirap experiment needs a pulse schedule")
    result = run_stirap(cfg.chain, cfg.schedule, grid=cfg.grid,
                        backend=cfg.stirap_backend, mode=cfg.stirap_mode)
    summary = {
        "final_transfer_population": float(np.asarray(result.series["pop_target"])[-1]),
        "final_start_population": float(np.asarray(result.series["pop_start"])[-1]),
        "peak_leakage": float(np.asarray(result.series["pop_modes"]).max()),
        "counterintuitive": cfg.schedule.counterintuitive,
        "mode": result.metadata.get("mode"),
        "backend": cfg.stirap_backend,
    }
    os.makedirs(cfg.out_dir, exist_ok=True)
    meta = _run_metadata(cfg, {"summary": summary})
    if cfg.write_csv:
        result.to_csv(os.path.join(cfg.out_dir, "stirap_curves.csv"), meta)
    _write_json(os.path.join(cfg.out_dir, "stirap_summary.json"),
                {"meta": meta, "summary": summary})
    _maybe_plot(cfg, result, "stirap_curves", ["pop_start", "pop_target", "pop_modes"])
    return summary


EXPERIMENT_RUNNERS = {
    "compare": run_compare,
    "transfer": run_transfer,
    "fidelity-scan": run_fidelity_scan,
    "stirap": run_stirap_experiment,
}


def run_experiment(cfg: ExperimentConfig):
    try:
        runner = EXPERIMENT_RUNNERS[cfg.experiment]
    except KeyError:
        raise ExperimentError(f"unknown experiment {cfg.experiment!r}") from None
    return runner(cfg)
