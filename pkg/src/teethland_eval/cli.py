"""Command-line entry point wiring the toolkit into the challenge workflow."""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .commands import DetectCommand, EvalCommand, RankCommand, ReportCommand, SynthCommand
from .config import AppConfig, get_default_config_path, load_config
from .exceptions import TeethlandEvalError, ValidationError
from .utils.report_writer import write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INTERNAL = 3
ERRORS_FILE = "errors.json"


def _team_spec(value: str) -> tuple[str, dict[str, float]]:
    """Parse NAME=SIGMA[,DROP[,SPURIOUS]] into a team name and noise fields."""
    name, sep, rest = value.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=SIGMA[,DROP[,SPURIOUS]], got '{value}'")
    keys = ("sigma", "drop_probability", "spurious_rate")
    parts = rest.split(",")
    if len(parts) > len(keys):
        raise argparse.ArgumentTypeError(f"too many noise values in '{value}'")
    try:
        return name, {k: float(v) for k, v in zip(keys, parts, strict=False)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"noise values must be numbers in '{value}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teethland-eval",
        description="Evaluation, ranking and baseline tooling for 3D dental landmark detection.",
    )
    parser.add_argument(
        "--config",
        type=Path,
        help=f"YAML configuration file (default: ./{get_default_config_path()} if present)",
    )
    parser.add_argument("--workers", type=int, help="Worker threads (overrides TEETHLAND_WORKERS)")
    parser.add_argument("--log-level", help="Log level (DEBUG, INFO, WARNING, ERROR)")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="Score one prediction directory against the ground truth")
    ev.add_argument("-g", "--ground-truth", type=Path, required=True)
    ev.add_argument("-p", "--predictions", type=Path, required=True)
    ev.add_argument("-o", "--output", type=Path, required=True)
    _add_evaluation_flags(ev)

    rk = sub.add_parser("rank", help="Rank several teams by bootstrapped significance tests")
    rk.add_argument("-g", "--ground-truth", type=Path, required=True)
    rk.add_argument("-t", "--team", type=Path, action="append", required=True, dest="teams",
                    help="Prediction directory of one team (repeat per team)")
    rk.add_argument("-o", "--output", type=Path, required=True)
    rk.add_argument("--iterations", type=int)
    rk.add_argument("--drop-fraction", type=float)
    rk.add_argument("--p-threshold", type=float)
    rk.add_argument("--streams", choices=["categories", "grand"])
    rk.add_argument("--resample-mode", choices=["drop", "bootstrap"])
    rk.add_argument("--zero-method", choices=["wilcox", "pratt"])
    rk.add_argument("--seed", type=int)
    _add_evaluation_flags(rk)

    sy = sub.add_parser("synth", help="Write a synthetic ground truth, mesh and prediction tree")
    sy.add_argument("-o", "--output", type=Path, required=True)
    sy.add_argument("-n", "--scans", type=int)
    sy.add_argument("--teeth", type=int, dest="tooth_count")
    sy.add_argument("--seed", type=int)
    sy.add_argument("--mesh-format", choices=["ply", "obj", "stl"])
    sy.add_argument("--team", type=_team_spec, action="append", dest="teams",
                    help="Synthetic team NAME=SIGMA[,DROP[,SPURIOUS]] (repeat per team)")

    dt = sub.add_parser("detect", help="Run the baseline detector over a mesh directory")
    dt.add_argument("-m", "--meshes", type=Path, required=True)
    dt.add_argument("-o", "--output", type=Path, required=True)

    rp = sub.add_parser("report", help="Render SVG/CSV bundles from eval and rank outputs")
    rp.add_argument("-e", "--eval-dir", type=Path, required=True)
    rp.add_argument("-r", "--rank-dir", type=Path)
    rp.add_argument("-o", "--output", type=Path, required=True)
    return parser


def _add_evaluation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau-step", type=float)
    parser.add_argument("--tau-max", type=float)
    parser.add_argument("--include-zero", action="store_true", default=None,
                        help="Prepend tau = 0 to the threshold grid")
    parser.add_argument("--inclusive-hits", action="store_true", default=None,
                        help="Count d <= tau as a hit instead of d < tau")
    parser.add_argument("--restrict-assignment", action="store_true", default=None,
                        help="Only assign references lying within each threshold")
    parser.add_argument("--pooled-ap", action="store_true", default=None,
                        help="Dataset-level AP instead of the per-scan mean")


def _overrides(args: argparse.Namespace) -> dict[str, dict[str, Any]]:
    get = lambda name: getattr(args, name, None)  # noqa: E731
    overrides: dict[str, dict[str, Any]] = {
        "execution": {"workers": args.workers},
        "logging": {"level": args.log_level},
        "evaluation": {
            "tau_step": get("tau_step"),
            "tau_max": get("tau_max"),
            "include_zero_threshold": get("include_zero"),
            "inclusive_hits": get("inclusive_hits"),
            "restrict_assignment_to_threshold": get("restrict_assignment"),
            "pooled_ap": get("pooled_ap"),
        },
    }
    if args.command == "rank":
        overrides["ranking"] = {
            "iterations": args.iterations,
            "drop_fraction": args.drop_fraction,
            "p_threshold": args.p_threshold,
            "streams": args.streams,
            "resample_mode": args.resample_mode,
            "zero_method": args.zero_method,
            "seed": args.seed,
        }
    if args.command == "synth":
        overrides["synth"] = {
            "scans": args.scans,
            "tooth_count": args.tooth_count,
            "seed": args.seed,
            "mesh_format": args.mesh_format,
            "teams": dict(args.teams) if args.teams else None,
        }
    return overrides


def resolve_config(args: argparse.Namespace) -> AppConfig:
    """Load the configuration file and apply flag overrides (flags win).

    An explicitly named file must exist; the default file is optional.
    """
    if args.config is not None:
        base = AppConfig.load_from_file(args.config)
    else:
        base = load_config(get_default_config_path())
    return base.with_overrides(_overrides(args))


def run_command(args: argparse.Namespace, config: AppConfig) -> dict[str, Any]:
    """Build the command object for `args.command` and run it."""
    match args.command:
        case "eval":
            return EvalCommand(config).handle(args.ground_truth, args.predictions, args.output)
        case "rank":
            return RankCommand(config).handle(args.ground_truth, args.teams, args.output)
        case "synth":
            return SynthCommand(config).handle(args.output)
        case "detect":
            return DetectCommand(config).handle(args.meshes, args.output)
        case "report":
            return ReportCommand(config).handle(args.eval_dir, args.output, args.rank_dir)
    raise ValidationError(f"Unknown command: {args.command}")


def _write_error_report(args: argparse.Namespace, error: TeethlandEvalError) -> None:
    output = getattr(args, "output", None)
    if output is None:
        return
    try:
        write_json(
            Path(output) / ERRORS_FILE,
            {"command": args.command, "error": type(error).__name__, "message": str(error)},
        )
    except OSError as e:
        logger.warning(f"Could not write {ERRORS_FILE}: {e}")


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code.

    0 on success, 2 on input or validation errors, 3 on internal errors.
    """
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        config.setup_logging()
        logger.info(f"Running {args.command}")
        result = run_command(args, config)
    except TeethlandEvalError as e:
        logger.error(str(e))
        _write_error_report(args, e)
        return EXIT_INVALID
    except Exception as e:
        logger.exception(f"Internal error in {args.command}: {e}")
        return EXIT_INTERNAL

    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
