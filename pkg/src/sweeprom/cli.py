"""Batch command-line interface.

Subcommands: ``fom`` (single full-order solve), ``train`` (build and
persist a reduced-system library), ``eval`` (errors/timings over a test
set), ``compare`` (three-way cost breakdown at one point).

Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
The only environment override is SWEEPROM_NUM_THREADS (offline workers).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fieldio, harness
from .configfile import default_config_path, load_config
from .fom import FomConvergenceError, solve_fom
from .operators import TransportOperator
from .problem import ConfigError, warn_if_extrapolating
from .sampling import SAMPLERS

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2


def _add_config_arg(parser):
    parser.add_argument(
        "--config", type=Path, default=None,
        help="problem config YAML (defaults to the shipped checkerboard)",
    )


def _load(args):
    path = args.config if args.config is not None else default_config_path()
    return load_config(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sweeprom",
        description="2-D multigroup transport solver with a sweep-based "
                    "reduced-order-model pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fom = sub.add_parser("fom", help="solve the full-order model once")
    _add_config_arg(p_fom)
    p_fom.add_argument("--theta1", type=float, default=None)
    p_fom.add_argument("--theta2", type=float, default=None)
    p_fom.add_argument("--output", type=Path, required=True,
                       help="field file for the scalar flux")
    p_fom.add_argument("--csv", action="store_true",
                       help="also export the field as CSV next to the output")

    p_train = sub.add_parser("train", help="build a reduced-system library")
    _add_config_arg(p_train)
    p_train.add_argument("--n-snapshots", type=int, required=True)
    p_train.add_argument("--sampler", choices=SAMPLERS, default="uniform")
    p_train.add_argument("--seed", type=int, default=None,
                         help="sampler seed (defaults to the config's)")
    rank_group = p_train.add_mutually_exclusive_group()
    rank_group.add_argument("--rank", type=int, default=None)
    rank_group.add_argument("--info-threshold", type=float, default=None)
    p_train.add_argument("--projection", choices=["petrov-galerkin", "galerkin"],
                         default="petrov-galerkin")
    p_train.add_argument("--output", type=Path, required=True)

    p_eval = sub.add_parser("eval", help="evaluate a library on a test set")
    _add_config_arg(p_eval)
    p_eval.add_argument("--library", type=Path, required=True)
    p_eval.add_argument("--test-count", type=int, default=10)
    p_eval.add_argument("--test-sampler", choices=SAMPLERS, default="uniform")
    p_eval.add_argument("--test-seed", type=int, default=None)
    p_eval.add_argument("--outdir", type=Path, required=True)

    p_cmp = sub.add_parser("compare", help="FOM vs reduced paths at one point")
    _add_config_arg(p_cmp)
    p_cmp.add_argument("--library", type=Path, required=True)
    p_cmp.add_argument("--theta1", type=float, required=True)
    p_cmp.add_argument("--theta2", type=float, required=True)

    return parser


def cmd_fom(args) -> int:
    config = _load(args)
    if args.theta1 is not None or args.theta2 is not None:
        config = config.with_parameters(
            config.theta1 if args.theta1 is None else args.theta1,
            config.theta2 if args.theta2 is None else args.theta2,
        )
    warn_if_extrapolating(config.theta1, config.theta2, context="fom solve")
    op = TransportOperator.from_config(config)
    result = solve_fom(config, operator=op)
    if not result.report.converged:
        print(
            f"error: GMRES did not converge (relative residual "
            f"{result.report.final_relative_residual:.3e})", file=sys.stderr,
        )
        return EXIT_NUMERICAL
    mesh = op.mesh
    fieldio.write_field(args.output, result.phi, nx=mesh.nx, ny=mesh.ny,
                        n_groups=op.n_groups)
    if args.csv:
        fieldio.export_field_csv(args.output.with_suffix(".csv"), result.phi,
                                 nx=mesh.nx, ny=mesh.ny, n_groups=op.n_groups)
    report = {
        "iterations": result.report.iterations,
        "final_relative_residual": result.report.final_relative_residual,
        "converged": result.report.converged,
        "sweep_count": result.report.sweep_count,
        "balance_residual": result.balance_residual,
    }
    args.output.with_suffix(".json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"wrote {args.output}")
    print(f"GMRES: {result.report.iterations} iterations, "
          f"relative residual {result.report.final_relative_residual:.3e}")
    print(f"particle balance residual: {result.balance_residual:.3e}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load(args)
    rank, threshold = args.rank, args.info_threshold
    if rank is None and threshold is None:
        rank = 5
    if rank is not None and rank > args.n_snapshots:
        print(f"error: rank {rank} exceeds snapshot count {args.n_snapshots}",
              file=sys.stderr)
        return EXIT_USAGE
    library = harness.run_train(
        config, sampler=args.sampler, n_snapshots=args.n_snapshots,
        rank=rank, info_threshold=threshold, projection=args.projection,
        seed=args.seed,
    )
    fieldio.save_library(args.output, library)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load(args) if args.config is not None else None
    library = fieldio.load_library(args.library, expected_config=config)
    if args.test_count < 1:
        print("error: test set is empty", file=sys.stderr)
        return EXIT_USAGE
    seed = args.test_seed if args.test_seed is not None else library.config.seed + 1
    points = harness.sample_test_points(library, args.test_sampler,
                                        args.test_count, seed)
    harness.run_eval(library, points, outdir=args.outdir)
    print(f"wrote {args.outdir / 'report.csv'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load(args) if args.config is not None else None
    library = fieldio.load_library(args.library, expected_config=config)
    harness.run_compare(library, (args.theta1, args.theta2))
    return EXIT_OK


_COMMANDS = {"fom": cmd_fom, "train": cmd_train, "eval": cmd_eval,
             "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, fieldio.FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FomConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
