"""Command-line interface.

    crwsim <transfer|compare|fidelity-scan|stirap|validate-config>
           --config cfg.json [--out DIR] [--backend B] [--seed S]
           [--traj N] [--plots]

Flags override the corresponding config entries.  Exit codes: 0 on success,
2 on configuration errors (diagnostic names the offending key path), 1 on
runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import ConfigError, load_config
from .experiments import ExperimentError, FidelityReport, run_experiment

SUBCOMMANDS = ("transfer", "compare", "fidelity-scan", "stirap", "validate-config")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crwsim",
        description="Quantum state transfer in a coupled-resonator waveguide",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--backend",
                        help="schrodinger|lindblad|mcwf|effective (stirap: effective|exact)")
        sp.add_argument("--seed", type=int, help="MCWF seed override")
        sp.add_argument("--traj", type=int, help="MCWF trajectory count override")
        sp.add_argument("--plots", action="store_true", help="emit SVG plots")
    return parser


def _apply_overrides(cfg, args):
    updates = {}
    if args.out:
        updates["out_dir"] = args.out
    if args.backend:
        updates["backend"] = args.backend
        if cfg.experiment == "stirap":
            updates["stirap_backend"] = args.backend
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.traj is not None:
        updates["n_traj"] = args.traj
    if args.plots:
        updates["plots"] = True
    return replace(cfg, **updates) if updates else cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command != "validate-config" and cfg.experiment != args.command:
            raise ConfigError("experiment",
                              f"config declares {cfg.experiment!r} but the "
                              f"{args.command!r} subcommand was invoked")
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print(json.dumps(cfg.resolved_dict(), indent=2, sort_keys=True))
        return 0

    try:
        result = run_experiment(cfg)
    except (ExperimentError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if isinstance(result, FidelityReport):
        print(result.to_text())
    else:
        print(json.dumps(result, indent=2, sort_keys=True, default=str))
    print(f"outputs written to {cfg.out_dir}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
