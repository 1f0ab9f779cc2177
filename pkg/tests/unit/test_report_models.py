"""
Unit tests for vche2d report models.
"""

import math

import pytest

from src.vche2d.models.report import DecayReport, ReportWarning, SeriesTable, Verdict


class TestVerdict:
    """Test pass/fail evaluation."""

    @pytest.mark.parametrize("value, threshold, comparison, passed", [
        (1.0, 1.0, "<=", True),
        (1.0, 1.0, "<", False),
        (2.0, 1.0, ">=", True),
        (1.0, 1.0, ">", False),
        (-0.5, -0.4, "<=", True),
    ])
    def test_comparisons(self, value, threshold, comparison, passed):
        assert Verdict("v", "c", value, threshold, comparison).passed is passed

    @pytest.mark.parametrize("value", [math.nan, math.inf, -math.inf])
    def test_non_finite_values_fail(self, value):
        """A NaN or infinite measurement never passes."""
        assert not Verdict("v", "c", value, 1.0, ">=").passed
        assert not Verdict("v", "c", value, 1.0, "<=").passed

    def test_unknown_comparison(self):
        with pytest.raises(ValueError):
            Verdict("v", "c", 1.0, 1.0, "==")


class TestSeriesTable:
    """Test time series tables."""

    def test_rows_follow_column_order(self):
        table = SeriesTable("run", ["time", "mass"])
        table.add_row({"mass": 1.0, "time": 0.0, "extra": 5.0})
        table.add_row({"time": 0.5, "mass": 0.9})
        assert table.rows == [(0.0, 1.0), (0.5, 0.9)]
        assert table.column("mass") == [1.0, 0.9]
        assert table.pairs("mass") == [(0.0, 1.0), (0.5, 0.9)]
        assert len(table) == 2

    def test_missing_column(self):
        table = SeriesTable("run", ["time", "mass"])
        with pytest.raises(ValueError):
            table.add_row({"time": 0.0})

    def test_needs_columns(self):
        with pytest.raises(ValueError):
            SeriesTable("run", [])


class TestDecayReport:
    """Test report aggregation."""

    def test_warnings_merge(self):
        """Repeated warnings collapse into one entry with a count."""
        report = DecayReport("exp")
        report.add_warning("boundary-decay", "field not decayed", time=0.5, value=1e-9)
        report.add_warning("boundary-decay", "field not decayed", time=1.0, value=3e-9)
        report.add_warning("boundary-decay", "field not decayed", time=1.5, value=2e-9)
        report.add_warning("cfl", "step rejected")
        assert len(report.warnings) == 2
        merged = report.warnings[0]
        assert merged == ReportWarning("boundary-decay", "field not decayed", 3, 0.5, 3e-9)

    def test_passed_and_exit_code(self):
        report = DecayReport("exp")
        assert report.passed
        report.add_verdict("a", "mass", 1e-12, 1e-8)
        assert report.exit_code() == 0
        report.add_verdict("b", "slope", -0.3, -0.4)
        assert not report.passed
        assert [v.name for v in report.failed_verdicts] == ["b"]
        assert report.exit_code() == 1

    def test_table_is_created_once(self):
        report = DecayReport("exp")
        first = report.table("norms", ["time", "l2"])
        assert report.table("norms", ["ignored"]) is first

    def test_notes(self):
        report = DecayReport("exp")
        report.note("stability_bound", 0.03)
        assert report.notes == {"stability_bound": 0.03}
