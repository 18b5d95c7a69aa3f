"""CLI interface for shape-control experiments."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from shape_control.config import Config
from shape_control.discretization.base import ConfigurationError
from shape_control.experiments.error_classifier import EXIT_SUCCESS, classify_error
from shape_control.experiments.exporters import write_csv, write_json
from shape_control.experiments.runner import ExperimentRunner, bmatrix
from shape_control.models.run_config import load_run_config

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False, quiet: bool = False):
    """Setup logging configuration (always on stderr)."""
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = Config.get_log_level()
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
        force=True,
    )


def _runner(args) -> ExperimentRunner:
    if not args.config:
        raise ConfigurationError(f"'{args.command}' needs --config")
    config_path = Path(args.config)
    config = load_run_config(config_path)
    return ExperimentRunner(config, seed=args.seed, base_dir=config_path.parent)


def simulate_command(args) -> int:
    """Handle simulate command: trajectory CSV plus a JSON summary next to it."""
    if not args.out:
        raise ConfigurationError("simulate writes a CSV and needs --out")
    frame, summary = _runner(args).simulate()
    out = Path(args.out)
    write_csv(frame, out)
    write_json(summary, out.with_suffix(".json"))
    return EXIT_SUCCESS


def sensitivity_command(args) -> int:
    """Handle sensitivity command."""
    write_json(_runner(args).sensitivity(), args.out)
    return EXIT_SUCCESS


def adjoint_command(args) -> int:
    """Handle adjoint command."""
    write_json(_runner(args).adjoint(), args.out)
    return EXIT_SUCCESS


def uc_check_command(args) -> int:
    """Handle uc-check command."""
    write_json(_runner(args).uc_check(), args.out)
    return EXIT_SUCCESS


def control_command(args) -> int:
    """
    Handle control command.

    With --out the solved path goes to that file, the residual history to
    <stem>_residuals.csv and the surjectivity report to <stem>_surjectivity.json.
    """
    run = _runner(args).control(args.target)
    if not args.out:
        logger.warning("No --out given: residual CSV and surjectivity report are not written")
        write_json(run.solution)
        return EXIT_SUCCESS

    out = Path(args.out)
    write_json(run.solution, out)
    write_csv(run.residuals, out.with_name(f"{out.stem}_residuals.csv"))
    write_json(run.surjectivity, out.with_name(f"{out.stem}_surjectivity.json"))
    return EXIT_SUCCESS


def bmatrix_command(args) -> int:
    """Handle bmatrix command."""
    write_json(bmatrix(args.j11, args.j12, args.j21, args.j22), args.out)
    return EXIT_SUCCESS


def report_command(args) -> int:
    """Handle report command."""
    write_json(_runner(args).report(), args.out)
    return EXIT_SUCCESS


def _add_common(parser: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        parser.add_argument("--config", type=str, help="Run-config file (.json, .yaml or .yml)")
        parser.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Seed of the randomized diagnostics (overrides the config)",
        )
    parser.add_argument(
        "--out", type=str, default=None, help="Output file (JSON goes to stdout when omitted)"
    )
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")


def create_parser() -> argparse.ArgumentParser:
    """Create argument parser."""
    parser = argparse.ArgumentParser(
        prog="shape-control",
        description="Semi-discrete shape controllability of the heat and wave equations",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    simulate_parser = subparsers.add_parser("simulate", help="Solve the forward equation")
    _add_common(simulate_parser)
    simulate_parser.set_defaults(func=simulate_command)

    sensitivity_parser = subparsers.add_parser(
        "sensitivity", help="Fréchet remainder and derivative-continuity checks"
    )
    _add_common(sensitivity_parser)
    sensitivity_parser.set_defaults(func=sensitivity_command)

    adjoint_parser = subparsers.add_parser("adjoint", help="Check the duality identity")
    _add_common(adjoint_parser)
    adjoint_parser.set_defaults(func=adjoint_command)

    uc_parser = subparsers.add_parser(
        "uc-check", help="Non-degeneracy scan and unique-continuation chain"
    )
    _add_common(uc_parser)
    uc_parser.set_defaults(func=uc_check_command)

    control_parser = subparsers.add_parser("control", help="Solve for a path reaching a target")
    _add_common(control_parser)
    control_parser.add_argument(
        "--target",
        type=str,
        default=None,
        help="Target CSV ('value' column or trajectory CSV); manufactured from the seed when omitted",
    )
    control_parser.set_defaults(func=control_command)

    bmatrix_parser = subparsers.add_parser("bmatrix", help="Transport matrix of a 2x2 Jacobian sample")
    _add_common(bmatrix_parser, config=False)
    for name, default in (("j11", 1.0), ("j12", 0.0), ("j21", 0.0), ("j22", 1.0)):
        bmatrix_parser.add_argument(
            f"--{name}", type=float, default=default, help=f"Jacobian entry {name[1:]}"
        )
    bmatrix_parser.set_defaults(func=bmatrix_command)

    report_parser = subparsers.add_parser("report", help="Run every diagnostic into one JSON")
    _add_common(report_parser)
    report_parser.set_defaults(func=report_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI entry point.

    Returns:
        Exit code: 0 success, 2 configuration error, 3 non-convergence,
        4 admissibility violation, 1 anything else
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help(sys.stderr)
        return 1

    try:
        setup_logging(args.verbose, args.quiet)
        return args.func(args)
    except Exception as e:
        category, exit_code, suggestion = classify_error(e)
        logger.debug("Command failed", exc_info=True)
        record = {
            "error": str(e),
            "category": category,
            "exit_code": exit_code,
            "type": type(e).__name__,
            "suggestion": suggestion,
        }
        sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
        return exit_code


if __name__ == "__main__":
    sys.exit(main())
