"""Experiment harness: catalog, fitting, reports and snapshots."""

from .experiments import (
    EXPERIMENTS,
    ExperimentOutcome,
    list_experiments,
    run_experiment,
    run_experiments,
    write_outcome,
)
from .fitting import fit_decay_exponent, fit_exponent
from .reporting import console_summary, summary_text, write_report
from .snapshot import dump_snapshot, read_snapshot, write_snapshot

__all__ = [
    "EXPERIMENTS", "ExperimentOutcome", "list_experiments", "run_experiment", "run_experiments",
    "write_outcome", "fit_decay_exponent", "fit_exponent", "console_summary", "summary_text",
    "write_report", "dump_snapshot", "read_snapshot", "write_snapshot",
]
