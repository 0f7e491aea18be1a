"""Command-line entry point.

One subcommand per experiment kind; each takes an optional flat key=value
config file, an output directory and repeatable ``--override key=value``
flags.  Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .experiments import (
    KINDS,
    ConfigError,
    NumericalFailure,
    RUNNERS,
    load_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fnls",
        description=(
            "Conservative pseudo-spectral simulator for the fractional "
            "nonlinear Schrodinger equation"
        ),
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    help_by_kind = {
        "evolve": "integrate one configuration and dump snapshots/invariants",
        "convergence": "time-step sweep against the nonlinear reference",
        "solver-bench": "per-step solver statistics under several strategies",
        "drift": "long run recording the single-level energy drift",
        "rho-demo": "higher-nonlinearity multistep scheme demonstration",
    }
    for kind in KINDS:
        p = sub.add_parser(kind, help=help_by_kind[kind])
        p.add_argument("--config", metavar="PATH", default=None,
                       help="flat key = value configuration file")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (default: out_dir key or cwd)")
        p.add_argument("--override", metavar="KEY=VALUE", action="append",
                       default=[], help="override one config key (repeatable)")
    return parser


def _summarise(kind: str, bundle) -> str:
    s = bundle.summary
    if kind == "convergence":
        errs = ", ".join(f"{e:.3e}" for e in s["errors"])
        return f"slope = {s['slope']:.3f}; errors: {errs}"
    if kind == "solver-bench":
        parts = []
        for label, run in s["runs"].items():
            its = run["iterations"]
            if run["failed_step"] is not None:
                parts.append(f"{label}: FAILED at step {run['failed_step']}")
            elif its:
                parts.append(
                    f"{label}: max {max(its)} / min {min(its)} / "
                    f"avg {sum(its) / len(its):.3f}"
                )
        return "\n".join(parts)
    if kind == "drift":
        return (
            f"energy drift (t<=300) = {s['energy_drift_t300']:.3e}; "
            f"mass drift (t<=300) = {s['mass_drift_t300']:.3e}"
        )
    if kind == "rho-demo":
        return (
            f"mass cycle drift = {s['mass_cycle_drift']:.3e}; "
            f"window-energy shift = {s['energy_shift_drift']:.3e}"
        )
    return f"steps = {s['steps']}; mass drift = {s['mass_drift']:.3e}"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.kind, args.config, args.override)
        bundle = RUNNERS[args.kind](cfg, out_dir=args.out)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {bundle.out_dir}")
    print(_summarise(args.kind, bundle))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
