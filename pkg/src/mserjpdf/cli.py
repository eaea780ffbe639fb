"""Command-line entry point.

Subcommands:
  run         execute a single-point experiment from a config file
  sweep       execute a swept experiment from a config file
  complexity  print per-symbol operation counts for an algorithm
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

from .errors import ConfigError
from .harness import emit_results, load_config, run_experiment
from .metrics import ALGORITHMS, complexity


def _add_run_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("config", help="path to a YAML experiment config")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--runs", type=int, default=None, help="override the trial count")
    sub.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sub.add_argument("--out", default=None, help="CSV output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mser-jpdf",
        description="Monte-Carlo SER experiments for reduced-rank adaptive receivers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="run a single experiment point"))
    _add_run_args(sub.add_parser("sweep", help="run a swept experiment"))

    comp = sub.add_parser("complexity", help="print operation counts")
    comp.add_argument("algorithm", choices=ALGORITHMS)
    comp.add_argument("--modulation", choices=("bpsk", "qam"), default="bpsk")
    comp.add_argument("--L", type=int, required=True, help="antennas")
    comp.add_argument("--P", type=int, required=True, help="oversampling factor")
    comp.add_argument("--D", type=int, default=None, help="reduced rank")
    comp.add_argument("--I", type=int, default=None, help="preprocessor length")
    comp.add_argument("--B", type=int, default=None, help="branch count")
    return parser


def _cmd_experiment(args, want_sweep: bool) -> int:
    cfg = load_config(args.config)
    if want_sweep and cfg.sweep_axis is None:
        raise ConfigError("sweep subcommand requires a 'sweep' section in the config")
    if not want_sweep and cfg.sweep_axis is not None:
        raise ConfigError("run subcommand takes a single-point config; use 'sweep'")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    curve, _ = run_experiment(cfg, workers=args.workers)
    if args.out:
        resolved = asdict(cfg)
        resolved["constellation"] = {
            "kind": cfg.constellation.kind,
            "M": cfg.constellation.M,
        }
        emit_results(curve, args.out, config=resolved)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(curve.to_csv())
    return 0


def _cmd_complexity(args) -> int:
    report = complexity(
        args.algorithm, args.modulation, L=args.L, P=args.P,
        D=args.D, I=args.I, B=args.B,
    )
    if report.order_only:
        print(f"{report.algorithm}: order {report.multiplications} operations")
    else:
        print(
            f"{report.algorithm}: {report.multiplications} multiplications, "
            f"{report.additions} additions per symbol"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_experiment(args, want_sweep=False)
        if args.command == "sweep":
            return _cmd_experiment(args, want_sweep=True)
        return _cmd_complexity(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
