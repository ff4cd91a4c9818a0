"""Command-line interface.

Subcommands map one-to-one onto the ``cmd_*`` operations in
:mod:`pkcontrol.harness.commands`. Library errors are turned into exit
codes here and nowhere else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pkcontrol import __version__
from pkcontrol.core.errors import PkControlError
from pkcontrol.core.models import ExitCode, RunStatus
from pkcontrol.harness import commands
from pkcontrol.harness.lqr_compare import PSI_SOURCES, format_table
from pkcontrol.utils.logging import get_logger, setup_logging

logger = get_logger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pkcontrol",
        description="Reinforcement learning with partially known models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train every configured seed")
    train.add_argument("--config", type=Path, required=True)
    train.add_argument("--out", type=Path)
    train.add_argument("--seed", type=int)
    train.add_argument("--preset")

    ev = sub.add_parser("eval", help="evaluate a checkpoint")
    ev.add_argument("checkpoint", type=Path)
    ev.add_argument("--episodes", type=int, default=1)
    ev.add_argument("--preset", action="append", dest="presets")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", type=Path)

    lqr = sub.add_parser("lqr", help="pure LQR cost table")
    lqr.add_argument("--config", type=Path, required=True)
    lqr.add_argument("--preset", action="append", dest="presets")
    lqr.add_argument("--psi", choices=PSI_SOURCES, default="true")
    lqr.add_argument("--seed", type=int, default=0)
    lqr.add_argument("--out", type=Path)

    grad = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--systems", type=int, default=50)

    plot = sub.add_parser("plotdata", help="export curve, trajectory and action CSVs")
    plot.add_argument("run_dir", type=Path)
    plot.add_argument("--preset", action="append", dest="presets")
    return parser


def _train(args: argparse.Namespace) -> int:
    config = commands.load_config(args.config, args.out, args.seed, args.preset)
    setup_logging(getattr(logging, args.log_level), log_dir=config.output_dir)
    records = commands.cmd_train(config)
    for r in records:
        final = "n/a" if r.final_mean_return is None else f"{r.final_mean_return:.3f}"
        print(f"seed {r.seed}: {r.status.value}, final mean return {final}")
        if r.message:
            print(f"  {r.message}")
    statuses = {r.status for r in records}
    if RunStatus.DIVERGED in statuses:
        return ExitCode.DIVERGENCE
    if RunStatus.FAILED in statuses:
        return ExitCode.VALIDATION_ERROR
    return ExitCode.SUCCESS


def _eval(args: argparse.Namespace) -> int:
    rows = commands.cmd_eval(args.checkpoint, args.episodes, args.presets, args.seed, args.out)
    print(commands.format_eval(rows))
    return ExitCode.SUCCESS


def _lqr(args: argparse.Namespace) -> int:
    config = commands.load_config(args.config, args.out, args.seed)
    rows = commands.cmd_lqr(config, args.presets, args.psi, args.seed)
    print(format_table(rows))
    return ExitCode.SUCCESS


def _gradcheck(args: argparse.Namespace) -> int:
    report = commands.cmd_gradcheck(args.seed, args.systems)
    print(report.format())
    return ExitCode.SUCCESS if report.passed else ExitCode.GRADCHECK_FAILURE


def _plotdata(args: argparse.Namespace) -> int:
    paths = commands.cmd_plotdata(args.run_dir, args.presets)
    for path in paths:
        print(path)
    return ExitCode.SUCCESS


HANDLERS = {
    "train": _train,
    "eval": _eval,
    "lqr": _lqr,
    "gradcheck": _gradcheck,
    "plotdata": _plotdata,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, which is the gradcheck code here
        return int(ExitCode.SUCCESS if e.code in (0, None) else ExitCode.VALIDATION_ERROR)
    setup_logging(getattr(logging, args.log_level))
    try:
        return int(HANDLERS[args.command](args))
    except PkControlError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return int(e.exit_code)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return int(ExitCode.VALIDATION_ERROR)
