"""Experiment configuration: strict JSON parsing, units, presets.

Config files are JSON.  Every rate is either a number (units of g), a string
like "10g" / "0.5 g", or an object {"value": 200.0, "unit": "MHz"} quoting a
conventional frequency nu (the rate is 2*pi*nu); physical-unit entries require
chain.g_physical so everything can be normalized to g = 1.  Unknown keys are
rejected with the offending key path.  The exact schema is documented in the
README and in the preset dictionaries below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainParams
from .dynamics import TimeGrid
from .effective import raman_rate
from .stirap import PulseSchedule

EXPERIMENTS = ("transfer", "compare", "fidelity-scan", "stirap")
BACKENDS = ("schrodinger", "lindblad", "mcwf", "effective")
GATE_CALIBRATIONS = ("auto", "model", "none")

UNIT_FACTORS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}


class ConfigError(ValueError):
    """Malformed configuration; carries the key path of the offender."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _check_keys(d: dict, allowed, path: str):
    if not isinstance(d, dict):
        raise ConfigError(path, f"expected an object, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}", f"unknown key (allowed: {sorted(allowed)})")


def _parse_g_physical(v, path: str) -> tuple[float, str]:
    """(value, unit) pair for g from a {'value', 'unit'} object."""
    _check_keys(v, {"value", "unit"}, path)
    try:
        val = float(v["value"])
        unit = v["unit"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"need numeric 'value' and 'unit': {exc}") from None
    if unit not in UNIT_FACTORS:
        raise ConfigError(f"{path}.unit", f"unknown unit {unit!r} (use {sorted(UNIT_FACTORS)})")
    if val <= 0:
        raise ConfigError(f"{path}.value", "g must be positive")
    return val, unit


def angular_frequency(value: float, unit: str) -> float:
    """Conventional frequency quote nu -> angular rate 2*pi*nu in rad/s."""
    return 2.0 * np.pi * value * UNIT_FACTORS[unit]


def parse_rate(v, path: str, g_angular: float | None = None) -> float:
    """One real rate in units of g."""
    if isinstance(v, bool):
        raise ConfigError(path, "rates must be numbers, 'Xg' strings, or unit objects")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        s = v.strip()
        if s.endswith("g"):
            try:
                return float(s[:-1].strip())
            except ValueError:
                raise ConfigError(path, f"cannot parse rate string {v!r}") from None
        raise ConfigError(path, f"rate string must end in 'g', got {v!r}")
    if isinstance(v, dict):
        _check_keys(v, {"value", "unit"}, path)
        if g_angular is None:
            raise ConfigError(path, "physical units need chain.g_physical to be set")
        unit = v.get("unit")
        if unit not in UNIT_FACTORS:
            raise ConfigError(f"{path}.unit", f"unknown unit {unit!r}")
        try:
            val = float(v["value"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"{path}.value", "need a numeric value") from None
        return 2.0 * np.pi * val * UNIT_FACTORS[unit] / g_angular
    raise ConfigError(path, f"cannot interpret rate {v!r}")


def _parse_complex(v, path: str, g_angular: float | None = None) -> complex:
    """Complex rate/amplitude: real forms as in parse_rate, or [re, im]."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(path, "complex entries are [re, im] pairs")
        try:
            return complex(float(v[0]), float(v[1]))
        except (TypeError, ValueError):
            raise ConfigError(path, "complex entries are [re, im] pairs of numbers") from None
    return complex(parse_rate(v, path, g_angular))


def _complex_out(z: complex):
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

_FIG3_CHAIN = {
    "n": 3,
    "delta": "10g",
    "j_c": "0.5g",
    "gamma": 0.0,
    "kappa": 0.0,
    "n_max": 1,
    "boundary": "periodic",
}

PRESETS: dict[str, dict] = {
    # three-node transfer comparison at the published operating point
    "fig3a": {
        "experiment": "compare",
        "backend": "schrodinger",
        "chain": dict(_FIG3_CHAIN, omega={"first": "0.02g", "last": "0.02g"}),
        "grid": {"t0": 0.0, "t1": "t_f", "n_steps": 1200},
        "drive": {"ramp_time": 100.0},
        "transfer": {"alpha": [0.7071067811865476, 0.0], "beta": [0.7071067811865476, 0.0]},
    },
    "fig3b": {
        "experiment": "compare",
        "backend": "schrodinger",
        "chain": dict(_FIG3_CHAIN, omega={"first": "0.01g", "last": "0.01g"}),
        "grid": {"t0": 0.0, "t1": "t_f", "n_steps": 1200},
        "drive": {"ramp_time": 100.0},
        "transfer": {"alpha": [0.7071067811865476, 0.0], "beta": [0.7071067811865476, 0.0]},
    },
    # superconducting-resonator hardware numbers for the length scan
    "fig4-hardware": {
        "experiment": "fidelity-scan",
        "chain": {
            "n": 100,
            "g_physical": {"value": 200.0, "unit": "MHz"},
            "delta": {"value": 2.0, "unit": "GHz"},
            "j_c": {"value": 100.0, "unit": "MHz"},
            "omega": {"first": {"value": 2.0, "unit": "MHz"}, "last": {"value": 2.0, "unit": "MHz"}},
            "gamma": {"value": 0.02, "unit": "MHz"},
            "kappa": {"value": 0.05, "unit": "MHz"},
            "n_max": 1,
            "boundary": "periodic",
        },
        "scan": {"n_from": 2, "n_to": 100},
    },
    "stirap-default": {
        "experiment": "stirap",
        "backend": "effective",
        "chain": dict(_FIG3_CHAIN, omega={"first": 0.0, "last": 0.0}),
        "schedule": {"shape": "sin2", "amp": "0.01g", "total_time": 64000.0, "overlap": 0.5},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# resolved configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description (all rates in units of g)."""

    experiment: str
    chain: ChainParams
    backend: str = "schrodinger"
    grid: TimeGrid | None = None
    ramp_time: float = 0.0
    # balanced input: the protocol's standard demonstration state
    alpha: complex = 2 ** -0.5 + 0.0j
    beta: complex = 2 ** -0.5 + 0.0j
    apply_gate: bool = True
    gate_calibration: str = "auto"
    n_traj: int = 500
    seed: int = 1234
    n_jobs: int = 1
    scan_n: tuple | None = None
    schedule: PulseSchedule | None = None
    stirap_mode: int | None = None
    stirap_backend: str = "effective"
    omega_k_convention: str = "per_k_max"
    g_physical: tuple | None = None  # (value, unit) of g, if known
    out_dir: str = "out"
    write_csv: bool = True
    plots: bool = False

    @property
    def g_angular(self) -> float | None:
        """rad/s carried by one unit of g, when g_physical is known."""
        if self.g_physical is None:
            return None
        return angular_frequency(*self.g_physical)

    def resolved_dict(self) -> dict:
        """Canonical numeric config; reloading it reproduces this object."""
        d: dict = {
            "experiment": self.experiment,
            "backend": self.backend,
            "chain": {
                "n": self.chain.n,
                "delta": self.chain.delta,
                "j_c": self.chain.j_c,
                "omega": [_complex_out(o) for o in self.chain.omega],
                "gamma": self.chain.gamma,
                "kappa": self.chain.kappa,
                "n_max": self.chain.n_max,
                "boundary": self.chain.boundary,
                "branch_to_1": self.chain.branch_to_1,
            },
            "drive": {"ramp_time": self.ramp_time},
            "transfer": {
                "alpha": _complex_out(self.alpha),
                "beta": _complex_out(self.beta),
                "apply_gate": self.apply_gate,
                "gate_calibration": self.gate_calibration,
            },
            "effective": {"omega_k_convention": self.omega_k_convention},
            "mcwf": {"n_traj": self.n_traj, "seed": self.seed, "n_jobs": self.n_jobs},
            "output": {"dir": self.out_dir, "csv": self.write_csv, "plots": self.plots},
        }
        if self.g_physical is not None:
            d["chain"]["g_physical"] = {"value": self.g_physical[0], "unit": self.g_physical[1]}
        if self.grid is not None:
            d["grid"] = {"t0": self.grid.t0, "t1": self.grid.t1,
                         "n_steps": self.grid.n_steps, "stride": self.grid.stride}
        if self.scan_n is not None:
            d["scan"] = {"n_list": list(self.scan_n)}
        if self.schedule is not None:
            s = self.schedule
            d["schedule"] = {"shape": s.shape, "amp1": s.amp1, "ampN": s.ampN,
                            "t_center1": s.t_center1, "t_centerN": s.t_centerN,
                            "width": s.width, "total_time": s.total_time}
            d["stirap"] = {"backend": self.stirap_backend}
            if self.stirap_mode is not None:
                d["stirap"]["mode"] = self.stirap_mode
        return d


TOP_KEYS = {"preset", "experiment", "backend", "chain", "grid", "drive", "transfer",
            "effective", "mcwf", "scan", "schedule", "stirap", "output"}
CHAIN_KEYS = {"n", "delta", "j_c", "omega", "gamma", "kappa", "n_max", "boundary",
              "branch_to_1", "g_physical"}


def _parse_chain(raw: dict, path: str = "chain") -> tuple[ChainParams, tuple | None]:
    _check_keys(raw, CHAIN_KEYS, path)
    g_phys = None
    g_ang = None
    if "g_physical" in raw:
        g_phys = _parse_g_physical(raw["g_physical"], f"{path}.g_physical")
        g_ang = angular_frequency(*g_phys)
    try:
        n = int(raw["n"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{path}.n", "node count n is required and must be an integer") from None
    if "delta" not in raw or "j_c" not in raw:
        raise ConfigError(path, "delta and j_c are required")
    delta = parse_rate(raw["delta"], f"{path}.delta", g_ang)
    j_c = parse_rate(raw["j_c"], f"{path}.j_c", g_ang)

    om_raw = raw.get("omega", 0.0)
    if isinstance(om_raw, dict) and not {"value", "unit"} >= set(om_raw):
        _check_keys(om_raw, {"first", "last"}, f"{path}.omega")
        omega = [0.0 + 0.0j] * n
        omega[0] = _parse_complex(om_raw.get("first", 0.0), f"{path}.omega.first", g_ang)
        omega[-1] = _parse_complex(om_raw.get("last", 0.0), f"{path}.omega.last", g_ang)
        omega = tuple(omega)
    elif isinstance(om_raw, (list, tuple)) and len(om_raw) and isinstance(om_raw[0], (list, tuple, str, dict, int, float)) and not (
            len(om_raw) == 2 and all(isinstance(x, (int, float)) for x in om_raw)):
        if len(om_raw) != n:
            raise ConfigError(f"{path}.omega", f"need {n} entries, got {len(om_raw)}")
        omega = tuple(_parse_complex(x, f"{path}.omega[{i}]", g_ang) for i, x in enumerate(om_raw))
    else:
        omega = _parse_complex(om_raw, f"{path}.omega", g_ang)

    kwargs = dict(
        n=n, delta=delta, j_c=j_c, omega=omega,
        gamma=parse_rate(raw.get("gamma", 0.0), f"{path}.gamma", g_ang),
        kappa=parse_rate(raw.get("kappa", 0.0), f"{path}.kappa", g_ang),
        n_max=int(raw.get("n_max", 1)),
        boundary=raw.get("boundary", "open"),
        branch_to_1=float(raw.get("branch_to_1", 0.0)),
    )
    try:
        return ChainParams(**kwargs), g_phys
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_grid(raw: dict, chain: ChainParams, path: str = "grid") -> TimeGrid:
    _check_keys(raw, {"t0", "t1", "n_steps", "stride"}, path)
    t0 = float(raw.get("t0", 0.0))
    t1_raw = raw.get("t1")
    if t1_raw is None:
        raise ConfigError(f"{path}.t1", "t1 is required")
    if isinstance(t1_raw, str):
        s = t1_raw.strip()
        mult = 1.0
        if s.endswith("t_f"):
            head = s[: -len("t_f")].strip().rstrip("*").strip()
            if head:
                try:
                    mult = float(head)
                except ValueError:
                    raise ConfigError(f"{path}.t1", f"cannot parse {t1_raw!r}") from None
            theta = raman_rate(chain, warn_regime=False)
            if theta == 0:
                raise ConfigError(f"{path}.t1", "t_f undefined: Theta_r = 0 for this chain")
            t1 = mult * np.pi / (2.0 * abs(theta))
        else:
            raise ConfigError(f"{path}.t1", f"string t1 must be '<mult> t_f', got {t1_raw!r}")
    else:
        t1 = float(t1_raw)
    try:
        return TimeGrid(t0=t0, t1=t1, n_steps=int(raw.get("n_steps", 1200)),
                        stride=int(raw.get("stride", 1)))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_schedule(raw: dict, g_ang, path: str = "schedule") -> PulseSchedule:
    keys = {"shape", "amp", "amp1", "ampN", "t_center1", "t_centerN", "width",
            "total_time", "overlap"}
    _check_keys(raw, keys, path)
    if "total_time" not in raw:
        raise ConfigError(f"{path}.total_time", "total_time is required")
    total = float(raw["total_time"])
    shape = raw.get("shape", "sin2")
    if "amp" in raw and not {"amp1", "ampN"} & set(raw):
        amp = parse_rate(raw["amp"], f"{path}.amp", g_ang)
        sched = PulseSchedule.counterintuitive_sin2(total, amp, float(raw.get("overlap", 0.5)))
        if shape != "sin2":
            sched = PulseSchedule(shape=shape, amp1=sched.amp1, ampN=sched.ampN,
                                  t_center1=sched.t_center1, t_centerN=sched.t_centerN,
                                  width=sched.width, total_time=total)
        return sched
    try:
        return PulseSchedule(
            shape=shape,
            amp1=parse_rate(raw["amp1"], f"{path}.amp1", g_ang),
            ampN=parse_rate(raw["ampN"], f"{path}.ampN", g_ang),
            t_center1=float(raw["t_center1"]),
            t_centerN=float(raw["t_centerN"]),
            width=float(raw["width"]),
            total_time=total,
        )
    except KeyError as exc:
        raise ConfigError(path, f"missing key {exc.args[0]!r} "
                          "(give amp+overlap or the full pulse list)") from None
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def load_config_data(data: dict) -> ExperimentConfig:
    """Resolve a raw config dictionary (strict keys, units normalized)."""
    _check_keys(data, TOP_KEYS, "config")
    if "preset" in data:
        name = data["preset"]
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r} (have {sorted(PRESETS)})")
        data = _merge(PRESETS[name], {k: v for k, v in data.items() if k != "preset"})

    if "experiment" not in data:
        raise ConfigError("experiment", "experiment kind is required")
    experiment = data["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {EXPERIMENTS}, got {experiment!r}")
    if "chain" not in data:
        raise ConfigError("chain", "chain section is required")
    chain, g_phys = _parse_chain(data["chain"])
    g_ang = angular_frequency(*g_phys) if g_phys else None

    backend = data.get("backend", "effective" if experiment == "stirap" else "schrodinger")
    if experiment == "stirap":
        if backend not in ("effective", "exact"):
            raise ConfigError("backend", "stirap backend must be 'effective' or 'exact'")
    elif backend not in BACKENDS:
        raise ConfigError("backend", f"must be one of {BACKENDS}, got {backend!r}")

    grid = None
    if "grid" in data:
        grid = _parse_grid(data["grid"], chain)

    drive = data.get("drive", {})
    _check_keys(drive, {"ramp_time"}, "drive")
    ramp_time = float(drive.get("ramp_time", 0.0))
    if ramp_time < 0:
        raise ConfigError("drive.ramp_time", "must be >= 0")

    tr = data.get("transfer", {})
    _check_keys(tr, {"alpha", "beta", "apply_gate", "gate_calibration"}, "transfer")
    alpha = _parse_complex(tr.get("alpha", 2 ** -0.5), "transfer.alpha")
    beta = _parse_complex(tr.get("beta", 2 ** -0.5), "transfer.beta")
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ConfigError("transfer", "|alpha|^2 + |beta|^2 must equal 1 within 1e-9")
    gate_cal = tr.get("gate_calibration", "auto")
    if gate_cal not in GATE_CALIBRATIONS:
        raise ConfigError("transfer.gate_calibration", f"must be one of {GATE_CALIBRATIONS}")

    eff = data.get("effective", {})
    _check_keys(eff, {"omega_k_convention"}, "effective")
    omega_k_convention = eff.get("omega_k_convention", "per_k_max")
    if omega_k_convention not in ("per_k_max", "global_max"):
        raise ConfigError("effective.omega_k_convention", "must be 'per_k_max' or 'global_max'")

    mc = data.get("mcwf", {})
    _check_keys(mc, {"n_traj", "seed", "n_jobs"}, "mcwf")
    n_traj = int(mc.get("n_traj", 500))
    seed = int(mc.get("seed", 1234))
    n_jobs = int(mc.get("n_jobs", 1))
    if n_traj < 1 or n_jobs < 1:
        raise ConfigError("mcwf", "n_traj and n_jobs must be >= 1")

    scan_n = None
    if "scan" in data:
        sc = data["scan"]
        _check_keys(sc, {"n_list", "n_from", "n_to"}, "scan")
        if "n_list" in sc:
            scan_n = tuple(int(x) for x in sc["n_list"])
        elif "n_from" in sc and "n_to" in sc:
            scan_n = tuple(range(int(sc["n_from"]), int(sc["n_to"]) + 1))
        else:
            raise ConfigError("scan", "give n_list or n_from/n_to")
        if not scan_n or any(x < 2 for x in scan_n):
            raise ConfigError("scan", "scan lengths must all be >= 2")
        scan_n = tuple(sorted(scan_n))

    schedule = None
    stirap_mode = None
    stirap_backend = backend if experiment == "stirap" else "effective"
    if "schedule" in data:
        schedule = _parse_schedule(data["schedule"], g_ang)
    if "stirap" in data:
        st = data["stirap"]
        _check_keys(st, {"mode", "backend"}, "stirap")
        if "mode" in st and st["mode"] is not None:
            stirap_mode = int(st["mode"])
        if "backend" in st:
            stirap_backend = st["backend"]
            if stirap_backend not in ("effective", "exact"):
                raise ConfigError("stirap.backend", "must be 'effective' or 'exact'")

    out = data.get("output", {})
    _check_keys(out, {"dir", "csv", "plots"}, "output")

    if experiment == "stirap" and schedule is None:
        raise ConfigError("schedule", "stirap experiments need a schedule section")
    if experiment == "fidelity-scan" and scan_n is None:
        raise ConfigError("scan", "fidelity-scan experiments need a scan section")

    return ExperimentConfig(
        experiment=experiment, chain=chain, backend=backend, grid=grid,
        ramp_time=ramp_time, alpha=alpha, beta=beta,
        apply_gate=bool(tr.get("apply_gate", True)), gate_calibration=gate_cal,
        n_traj=n_traj, seed=seed, n_jobs=n_jobs,
        scan_n=scan_n, schedule=schedule, stirap_mode=stirap_mode,
        stirap_backend=stirap_backend, omega_k_convention=omega_k_convention,
        g_physical=g_phys, out_dir=str(out.get("dir", "out")),
        write_csv=bool(out.get("csv", True)), plots=bool(out.get("plots", False)),
    )


def load_config(path) -> ExperimentConfig:
    """Load and resolve a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return load_config_data(data)
