"""Command-line entry point: ``covdist <subcommand> ...``.

Exit codes: 0 success, 1 usage/config/runtime error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .config import load_config
from .errors import ConfigError, CovDistError

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for validation failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covdist", description="Deterministic equivalents of plug-in covariance distances.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("det-equiv", help="closed-form deterministic equivalents")
    d.add_argument("--config", required=True)
    d.add_argument("--out", default="-", help="CSV path ('-' for stdout)")

    c = sub.add_parser("convergence", help="Monte Carlo means against deterministic equivalents")
    c.add_argument("--config", required=True)
    c.add_argument("--trials", type=int, help="overrides the config")
    c.add_argument("--seed", type=int, help="overrides the config")
    c.add_argument("--out", default="-")

    s = sub.add_parser("sweep", help="deterministic equivalents over a parameter grid")
    s.add_argument("--config", required=True)
    s.add_argument("--param", default="rho2", choices=experiments.SWEEP_PARAMS)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--out", default="-")

    v = sub.add_parser("validate", help="run the numerical self-checks")
    v.add_argument("--fast", action="store_true", help="fewer randomized cases")
    return p


def _run(args) -> int:
    if args.command == "validate":
        lines, ok = experiments.run_validate(fast=args.fast)
        print("\n".join(lines))
        return EXIT_OK if ok else EXIT_VALIDATION
    cfg = load_config(args.config)
    if args.command == "det-equiv":
        rows = experiments.run_det_equiv(cfg)
    elif args.command == "convergence":
        rows = experiments.run_convergence(cfg, trials=args.trials, seed=args.seed)
    else:
        rows = experiments.run_sweep(cfg, args.param, args.start, args.stop, args.steps)
    experiments.write_csv(rows, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"covdist: config error: {exc}", file=sys.stderr)
    except CovDistError as exc:
        print(f"covdist: {type(exc).__name__}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"covdist: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
