"""
vche2d Reporting

Plain-text report output: one CSV per series table (17 significant digits,
gnuplot-friendly) plus a summary of configuration, fitted exponents,
verdicts and warnings. Report bodies carry no timestamps, so identical
configurations give byte-identical files.
"""

import csv
import io
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..models.report import DecayReport, SeriesTable
from ..utils.logger import get_logger

NUMBER_FORMAT = "{:.17g}"

logger = get_logger(__name__)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return NUMBER_FORMAT.format(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def series_csv(table: SeriesTable) -> str:
    """CSV text of a table: header row, then one row per sample."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([NUMBER_FORMAT.format(float(v)) for v in row])
    return buffer.getvalue()


def summary_text(report: DecayReport) -> str:
    """Human-readable report body."""
    lines: List[str] = [f"experiment: {report.experiment}", "", "[config]"]
    for key in sorted(report.config):
        lines.append(f"{key} = {_format_value(report.config[key])}")

    lines += ["", "[exponents]"]
    for exp in report.exponents:
        lines.append(
            f"{exp.name}: slope={_format_value(exp.slope)} residual={_format_value(exp.residual)} "
            f"window=[{_format_value(float(exp.window[0]))}, {_format_value(float(exp.window[1]))}] "
            f"mode={exp.mode} samples={exp.samples}")

    lines += ["", "[verdicts]"]
    for verdict in report.verdicts:
        status = "PASS" if verdict.passed else "FAIL"
        lines.append(f"{status} {verdict.name} ({verdict.criterion}): "
                     f"{_format_value(float(verdict.value))} {verdict.comparison} "
                     f"{_format_value(float(verdict.threshold))}")

    lines += ["", "[warnings]"]
    for warning in report.warnings:
        extra = ""
        if warning.first_time is not None:
            extra += f" first_time={_format_value(float(warning.first_time))}"
        if warning.max_value is not None:
            extra += f" max_value={_format_value(float(warning.max_value))}"
        lines.append(f"{warning.category}: {warning.message} (count={warning.count}){extra}")

    if report.notes:
        lines += ["", "[notes]"]
        for key in sorted(report.notes):
            lines.append(f"{key} = {_format_value(report.notes[key])}")

    lines += ["", f"result: {'PASS' if report.passed else 'FAIL'}", ""]
    return "\n".join(lines)


def write_report(report: DecayReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write series CSVs and summary.txt under ``out_dir/<experiment>/``."""
    target = Path(out_dir) / report.experiment
    target.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}
    for name in sorted(report.series):
        path = target / f"series_{name}.csv"
        path.write_text(series_csv(report.series[name]))
        written[name] = path
    summary = target / "summary.txt"
    summary.write_text(summary_text(report))
    written["summary"] = summary
    logger.info("Report written", experiment=report.experiment, directory=str(target),
                files=len(written))
    return written


def console_summary(report: DecayReport, directory: Optional[Path] = None) -> str:
    """One line per verdict for CLI stdout."""
    head = f"{report.experiment}: {'PASS' if report.passed else 'FAIL'}"
    if directory is not None:
        head += f" ({directory})"
    rows = [head]
    for verdict in report.verdicts:
        rows.append(f"  {'ok  ' if verdict.passed else 'FAIL'} {verdict.name}: "
                    f"{verdict.value:.6g} {verdict.comparison} {verdict.threshold:.6g}")
    return "\n".join(rows)
