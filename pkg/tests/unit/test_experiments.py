"""
Unit tests for the vche2d experiment catalog and runner.
"""

import threading

import numpy as np
import pytest

from src.vche2d.config.settings import DataConfig, ExperimentSettings, GridConfig, SteppingConfig
from src.vche2d.core.evolution import SimState
from src.vche2d.core.norms import weighted_norm
from src.vche2d.core.spectral import make_grid
from src.vche2d.harness.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    list_experiments,
    physical_initial_data,
    run_experiment,
    run_experiments,
    scaled_initial_data,
    worker_count,
    write_outcome,
)
from src.vche2d.harness.snapshot import read_snapshot
from src.vche2d.models.fields import Frame, ScalarField
from src.vche2d.utils.exceptions import ExperimentError, NumericalInstabilityError


def small_state(time=0.5):
    grid = make_grid(16, 4.0)
    x1, x2 = grid.mesh
    return SimState(Frame.SCALED, time, ScalarField(grid, np.exp(-x1 ** 2 - x2 ** 2)), 0.1)


def passing_runner(settings, report):
    report.table("norms", ["time", "l2"]).add_row({"time": 0.0, "l2": 1.0})
    report.add_verdict("mass", "drift", 0.0, 1e-8)
    return small_state()


def failing_runner(settings, report):
    report.add_verdict("slope", "slope <= -1", -0.5, -1.0)
    return None


@pytest.fixture
def dummy_experiments(monkeypatch):
    """Register throwaway experiments; the catalog is restored afterwards."""
    monkeypatch.setitem(EXPERIMENTS, "dummy-pass", ExperimentSpec("dummy-pass", "passes", passing_runner))
    monkeypatch.setitem(EXPERIMENTS, "dummy-fail", ExperimentSpec("dummy-fail", "fails", failing_runner))
    return EXPERIMENTS


class TestCatalog:
    """Test the registered experiments."""

    def test_names(self):
        names = [spec.name for spec in list_experiments()]
        assert names == ["first-order-decay", "invariants", "lp-verification",
                         "second-order-decay", "smoothing-L1Lp"]

    def test_descriptions(self):
        for spec in list_experiments():
            assert spec.description
            assert callable(spec.runner)

    def test_unknown_name(self):
        with pytest.raises(ExperimentError) as exc_info:
            run_experiment("third-order-decay", ExperimentSettings())
        assert "smoothing-L1Lp" in exc_info.value.details["valid"]


class TestInitialData:
    """Test the initial data builders."""

    @pytest.mark.parametrize("m", [2, 3])
    def test_scaled_norm(self, m):
        grid = make_grid(64, 12.0)
        field = scaled_initial_data(grid, DataConfig(), m, 0.05)
        assert field.frame is Frame.SCALED
        assert weighted_norm(field, m) == pytest.approx(0.05, rel=1e-12)

    def test_scaled_data_off_centre(self):
        grid = make_grid(64, 12.0)
        field = scaled_initial_data(grid, DataConfig(), 2, 0.05)
        peak = np.unravel_index(np.argmax(field.values), field.values.shape)
        assert grid.points[peak[1]] > 0.0
        assert grid.points[peak[0]] < 0.0

    def test_physical_mass(self):
        grid = make_grid(64, 48.0)
        data = DataConfig(mass=0.2)
        field = physical_initial_data(grid, data)
        assert field.frame is Frame.PHYSICAL
        assert grid.cell_area * float(np.sum(field.values)) == pytest.approx(0.2, rel=1e-12)


class TestRunExperiment:
    """Test running registered experiments."""

    def test_report_carries_config(self, dummy_experiments):
        settings = ExperimentSettings()
        outcome = run_experiment("dummy-pass", settings)
        assert outcome.report.experiment == "dummy-pass"
        assert outcome.report.config == settings.flat()
        assert outcome.report.passed
        assert outcome.final_state.time == 0.5

    def test_failing_verdict(self, dummy_experiments):
        outcome = run_experiment("dummy-fail", ExperimentSettings())
        assert not outcome.report.passed
        assert outcome.final_state is None

    def test_input_order_kept(self, monkeypatch):
        """The first job finishes last but is still returned first."""
        second_done = threading.Event()

        def slow(settings, report):
            assert second_done.wait(5.0)
            report.note("order", 1.0)

        def fast(settings, report):
            report.note("order", 2.0)
            second_done.set()

        monkeypatch.setitem(EXPERIMENTS, "slow", ExperimentSpec("slow", "", slow))
        monkeypatch.setitem(EXPERIMENTS, "fast", ExperimentSpec("fast", "", fast))
        outcomes = run_experiments(["slow", "fast"], ExperimentSettings(threads=2))
        assert [o.report.experiment for o in outcomes] == ["slow", "fast"]
        assert [o.report.notes["order"] for o in outcomes] == [1.0, 2.0]

    def test_names_checked_before_running(self, monkeypatch):
        calls = []
        monkeypatch.setitem(EXPERIMENTS, "recorder",
                            ExperimentSpec("recorder", "", lambda s, r: calls.append(1)))
        with pytest.raises(ExperimentError):
            run_experiments(["recorder", "missing"], ExperimentSettings())
        assert calls == []

    def test_outputs_written(self, dummy_experiments, tmp_path):
        run_experiments(["dummy-pass", "dummy-fail"], ExperimentSettings(threads=2), tmp_path)
        assert (tmp_path / "dummy-pass" / "summary.txt").exists()
        assert (tmp_path / "dummy-pass" / "series_norms.csv").exists()
        assert (tmp_path / "dummy-pass" / "final_state.vche").exists()
        assert (tmp_path / "dummy-fail" / "summary.txt").exists()
        assert not (tmp_path / "dummy-fail" / "final_state.vche").exists()

    def test_raising_runner_keeps_other_outcomes(self, dummy_experiments, monkeypatch, tmp_path):
        def unstable(settings, report):
            raise NumericalInstabilityError("step produced non-finite values", {"time": 0.3})

        monkeypatch.setitem(EXPERIMENTS, "unstable", ExperimentSpec("unstable", "raises", unstable))
        outcomes = run_experiments(["unstable", "dummy-pass"], ExperimentSettings(threads=2),
                                   tmp_path)
        assert [o.report.experiment for o in outcomes] == ["unstable", "dummy-pass"]
        failed, passed = outcomes
        assert not failed.report.passed
        assert failed.final_state is None
        assert [v.name for v in failed.report.failed_verdicts] == ["completed"]
        assert failed.report.warnings[0].category == "error"
        assert "NumericalInstabilityError" in failed.report.warnings[0].message
        assert passed.report.passed
        assert (tmp_path / "unstable" / "summary.txt").exists()
        assert (tmp_path / "dummy-pass" / "summary.txt").exists()


class TestFirstOrderDecay:
    """Test the scaled-frame decay experiment on a small grid."""

    @pytest.mark.slow
    def test_global_bound_recorded(self):
        settings = ExperimentSettings(grid=GridConfig(64, 12.0),
                                      stepping=SteppingConfig(0.01, 0.5, 5))
        report = run_experiment("first-order-decay", settings).report
        verdicts = {v.name: v for v in report.verdicts}
        assert verdicts["global_bound"].passed
        assert verdicts["mass_drift"].passed
        norms = report.series["decay"].column("norm_m2")
        assert report.notes["sup_norm_m2"] == max(norms)
        assert verdicts["global_bound"].value == pytest.approx(max(norms) / norms[0])

    @pytest.mark.slow
    def test_bound_scales_with_data(self):
        """Halving the data at least halves the sup of the weighted norm, within 10 %."""
        sups = []
        for size in (0.05, 0.025):
            settings = ExperimentSettings(grid=GridConfig(64, 12.0),
                                          stepping=SteppingConfig(0.01, 1.0, 5),
                                          data=DataConfig(initial_norm=size))
            sups.append(run_experiment("first-order-decay", settings).report.notes["sup_norm_m2"])
        assert sups[1] <= 0.55 * sups[0]


class TestWriteOutcome:
    """Test report and snapshot output."""

    def test_final_state_snapshot(self, dummy_experiments, tmp_path):
        outcome = run_experiment("dummy-pass", ExperimentSettings())
        target = write_outcome(outcome, tmp_path)
        assert target == tmp_path / "dummy-pass"

        header, field = read_snapshot(target / "final_state.vche")
        assert header.time == 0.5
        assert header.alpha == 0.1
        assert np.array_equal(field.values, outcome.final_state.w.values)


class TestWorkerCount:
    """Test the thread pool size."""

    @pytest.mark.parametrize("threads, jobs, expected", [
        (3, 5, 3),
        (8, 2, 2),
        (1, 4, 1),
        (4, 0, 1),
    ])
    def test_configured_cap(self, threads, jobs, expected):
        assert worker_count(ExperimentSettings(threads=threads), jobs) == expected

    def test_default_uses_cpu_count(self, monkeypatch):
        monkeypatch.setattr("src.vche2d.harness.experiments.os.cpu_count", lambda: 6)
        assert worker_count(ExperimentSettings(threads=0), 10) == 6
        assert worker_count(ExperimentSettings(threads=0), 2) == 2

    def test_unknown_cpu_count(self, monkeypatch):
        monkeypatch.setattr("src.vche2d.harness.experiments.os.cpu_count", lambda: None)
        assert worker_count(ExperimentSettings(threads=0), 3) == 1
