"""Command line entry point: ``python -m stdgocp --example 1 --scheme dg0``."""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import DEFAULT_LEVELS, SCHEMES, StudyConfig, run_study
from .manufactured import DEFAULT_TX, TX_DEFINITIONS


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(s) for s in text.split(",") if s.strip())


def _int_list(text: str) -> tuple[int, ...]:
    try:
        levels = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated integers, got {text!r}")
    if not levels or min(levels) < 1:
        raise argparse.ArgumentTypeError("need at least one positive level")
    return levels


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stdgocp", description="Manufactured-solution convergence study "
                                "for control-constrained convection-diffusion optimal control.")
    p.add_argument("--example", type=int, choices=(1, 2), default=1)
    p.add_argument("--scheme", choices=SCHEMES, default="dg0")
    p.add_argument("--levels", type=_int_list, default=DEFAULT_LEVELS,
                   help="subdivisions n = 1/k = 1/h per level (default %(default)s)")
    p.add_argument("--sigma", type=float, default=6.0, help="SIPG penalty parameter")
    p.add_argument("--alpha", type=float, default=None, help="regularization weight (default 1)")
    p.add_argument("--tol", type=float, default=1e-10, help="PDAS control-update tolerance")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tx-def", choices=sorted(TX_DEFINITIONS), default=DEFAULT_TX,
                   help="characteristic variable of example 2 (default %(default)s)")
    p.add_argument("--time-rhs", choices=("galerkin", "nodal"), default="galerkin",
                   help="right-hand side treatment of the dG schemes")
    p.add_argument("--no-endpoint-weights", action="store_true",
                   help="cn-do: drop the factor 2 at the end nodes of the control update")
    p.add_argument("--snapshots", type=_float_list, default=(),
                   help="times at which y, p, u of the finest level are written, e.g. 0.5")
    p.add_argument("--out", default=None, help="output directory (nothing written if omitted)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = StudyConfig(
            example=args.example, scheme=args.scheme, levels=args.levels, sigma=args.sigma,
            alpha=args.alpha, tol=args.tol, max_iter=args.max_iter, tx_def=args.tx_def,
            time_rhs=args.time_rhs, endpoint_weights=not args.no_endpoint_weights,
            snapshots=args.snapshots, out=args.out,
        )
        table = run_study(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(table.to_markdown())
    if table.failed:
        for lv in table.failed:
            print(f"level n={lv.n} failed: {lv.failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
