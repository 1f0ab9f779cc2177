"""
vche2d Command Line

    vche2d run <experiment> [<experiment> ...] [--config FILE] [--key=value ...] [--out DIR]
    vche2d list [--settings]
    vche2d snapshot-dump FILE

Summaries go to stdout, logs to stderr. ``run`` exits 1 when any verdict
fails and 2 on configuration or usage errors.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .config.settings import SettingsManager, parse_override, settings_summary
from .harness.experiments import list_experiments, run_experiments
from .harness.reporting import console_summary
from .harness.snapshot import dump_snapshot
from .utils.exceptions import ConfigurationError, ExperimentError, SnapshotFormatError, VcheError
from .utils.logger import LogLevel, configure_logging, get_logger

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vche2d",
        description="Viscous Camassa-Holm vorticity simulator and decay-rate harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one or more experiments", allow_abbrev=False,
                         epilog="Any further --key=value pair overrides a setting.")
    run.add_argument("experiments", nargs="+", help="Experiment names (see 'vche2d list')")
    run.add_argument("--config", help="YAML, JSON or flat key = value configuration file")
    run.add_argument("--out", default="results", help="Output directory (default: results)")
    run.add_argument("--config-dir", default="config",
                     help="Directory searched for default.yaml (default: config)")

    listing = sub.add_parser("list", help="List the experiment catalog")
    listing.add_argument("--settings", action="store_true",
                         help="Also print the default settings")

    dump = sub.add_parser("snapshot-dump", help="Print a snapshot header and field summary")
    dump.add_argument("file", help="Snapshot file (.vche)")
    return parser


def split_overrides(extra: Sequence[str]) -> Tuple[Dict[str, str], List[str]]:
    """Separate ``--key=value`` overrides from unrecognised arguments."""
    overrides: Dict[str, str] = {}
    rejected: List[str] = []
    for arg in extra:
        if arg.startswith("--") and "=" in arg:
            key, value = parse_override(arg)
            overrides[key] = value
        else:
            rejected.append(arg)
    return overrides, rejected


def _run(args: argparse.Namespace, extra: Sequence[str]) -> int:
    overrides, rejected = split_overrides(extra)
    if rejected:
        print(f"vche2d: unrecognized arguments: {' '.join(rejected)}", file=sys.stderr)
        return EXIT_USAGE

    manager = SettingsManager(config_dir=args.config_dir)
    settings = manager.load_settings(args.config, overrides)
    configure_logging(LogLevel.parse(settings.logging.level), settings.logging.file_path,
                      settings.logging.structured)

    outcomes = run_experiments(args.experiments, settings, args.out)
    for outcome in outcomes:
        print(console_summary(outcome.report, Path(args.out) / outcome.report.experiment))
    failed = [o.report.experiment for o in outcomes if not o.report.passed]
    if failed:
        logger.warning("Experiments with failing verdicts", experiments=failed)
        return EXIT_FAILED
    return EXIT_OK


def _list(args: argparse.Namespace) -> int:
    for spec in list_experiments():
        print(f"{spec.name:<20} {spec.description}")
    if args.settings:
        print(settings_summary(SettingsManager().load_settings()))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "run":
            return _run(args, extra)
        if extra:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        if args.command == "list":
            return _list(args)
        print(dump_snapshot(args.file))
        return EXIT_OK
    except (ConfigurationError, ExperimentError) as e:
        print(f"vche2d: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SnapshotFormatError, OSError) as e:
        print(f"vche2d: {e}", file=sys.stderr)
        return EXIT_FAILED
    except VcheError as e:
        logger.error("Run aborted", error=e.message, details=e.details)
        print(f"vche2d: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
