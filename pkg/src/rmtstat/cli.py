"""Command line entry points.

Exit codes: 0 run completed (verdict PASS or no verdict), 1 a statistical
verdict failed, 2 usage or config error, 3 numerical failure (eigensolver
breakdown, quadrature error out of tolerance, overflow).
"""

from __future__ import annotations

import argparse
import cmath
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .det_functional import (
    ComplexZ,
    gaussian_integral_check,
    poisson_side_quadrature,
)
from .experiments import execute
from .spectra import EigenConvergenceError, EigenResidualError

_QUAD_TOL = 1e-7
_GAUSS_TOL = 1e-8

_NUMERICAL = (EigenConvergenceError, EigenResidualError, ArithmeticError)

# fixed symmetric positive definite probes for the integral identity
_CHECK_MATRICES = (
    [[2.0]],
    [[2.0, 0.5], [0.5, 1.0]],
    [[3.0, 0.4, 0.2], [0.4, 2.0, 0.1], [0.2, 0.1, 1.0]],
)


def _seed_type(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {raw!r}")
    if not 0 <= value < 2**63:
        raise argparse.ArgumentTypeError("seed must fit in 63 bits")
    return value


def _workers_type(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"workers must be an integer, got {raw!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("workers must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmtstat",
        description="Spectral statistics of heavy-tailed random matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", help="path to the experiment config")
    run.add_argument("--seed", type=_seed_type, help="override the config seed")
    run.add_argument("--workers", type=_workers_type, help="override worker count")
    run.add_argument("--out", help="override the output directory")

    val = sub.add_parser("validate", help="parse a config and report problems")
    val.add_argument("config", help="path to the experiment config")

    tw = sub.add_parser("tw-table", help="write the edge-law CDF table as CSV")
    tw.add_argument("--smin", type=float, default=-8.0, help="left grid end")
    tw.add_argument("--smax", type=float, default=8.0, help="right grid end")
    tw.add_argument("--step", type=float, default=0.005, help="grid spacing")
    tw.add_argument("--out", default="out", help="output directory")

    sub.add_parser(
        "quadcheck",
        help="self-check the quadrature and integral identities",
    )
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
        if cfg.ensemble is not None:
            cfg = replace(cfg, ensemble=replace(cfg.ensemble, seed=args.seed))
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _echo_summary(cfg: ExperimentConfig) -> None:
    summary = Path(cfg.output_dir) / "summary.txt"
    sys.stdout.write(summary.read_text(encoding="utf-8"))


def _cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        code = execute(cfg)
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _echo_summary(cfg)
    return code


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"valid config: experiment {cfg.experiment!r}, seed {cfg.seed}")
    return 0


def _cmd_tw_table(args) -> int:
    cfg = ExperimentConfig(
        experiment="tw-table",
        ensemble=None,
        trials=1,
        seed=0,
        workers=1,
        output_dir=args.out,
        name="tw-table",
        s_min=args.smin,
        s_max=args.smax,
        step=args.step,
    )
    try:
        code = execute(cfg)
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _echo_summary(cfg)
    return code


def _cmd_quadcheck(_args) -> int:
    all_ok = True
    for z in (ComplexZ(1.0), ComplexZ(4.0), ComplexZ(2.0, 2.0)):
        value = poisson_side_quadrature(z)
        target = -2.0 * cmath.sqrt(z.value) / math.pi
        err = abs(value - target)
        ok = err < _QUAD_TOL
        all_ok = all_ok and ok
        print(
            f"tail-sum quadrature z={z.re:g}{z.im:+g}i: "
            f"|I + 2 sqrt(z)/pi| = {err:.3e} {'PASS' if ok else 'FAIL'}"
        )
    for mat in _CHECK_MATRICES:
        lhs, rhs = gaussian_integral_check(np.array(mat))
        err = abs(lhs - rhs)
        ok = err < _GAUSS_TOL
        all_ok = all_ok and ok
        print(
            f"gaussian integral identity dim={len(mat)}: "
            f"|det^(-1/2) - quadrature| = {err:.3e} {'PASS' if ok else 'FAIL'}"
        )
    return 0 if all_ok else 1


_COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "tw-table": _cmd_tw_table,
    "quadcheck": _cmd_quadcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
