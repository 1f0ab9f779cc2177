"""
Unit tests for vche2d time integration.
"""

import math

import numpy as np
import pytest

from src.vche2d.core.eigenbasis import basis, gamma_field, gaussian_G, hermite_F, lambda_field, oseen_vortex, profile
from src.vche2d.core.evolution import (
    SimConfig,
    System,
    VorticitySolver,
    forcing_sign_check,
    lp_observer,
    mass_observer,
    moment_observer,
    norm_observer,
    rhs_scaled,
)
from src.vche2d.core.norms import moments, weighted_norm
from src.vche2d.core.operators import heat_semigroup
from src.vche2d.core.sampling import random_localized_field
from src.vche2d.core.spectral import gradient, make_grid
from src.vche2d.models.fields import Frame, ScalarField
from src.vche2d.models.params import EigenCoefficients
from src.vche2d.utils.exceptions import CFLViolationError, FieldError, ParameterError


def small_config(**overrides):
    values = dict(n_points=64, half_width=12.0, dt=0.01, t_end=0.2, output_every=5)
    values.update(overrides)
    return SimConfig(**values)


class TestSimConfig:
    """Test simulation parameter validation."""

    @pytest.mark.parametrize("overrides", [
        {"dt": 0.0},
        {"dt": -0.1},
        {"t_end": -1.0},
        {"alpha": -0.1},
        {"output_every": 0},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ParameterError):
            small_config(**overrides)

    def test_physical_frame_is_full_only(self):
        """Linearized systems live in the scaled frame."""
        with pytest.raises(ParameterError):
            small_config(frame=Frame.PHYSICAL, system=System.LINEARIZED,
                         linear_context=EigenCoefficients(1.0))

    def test_context_required(self):
        """Non-full systems need the frozen moments."""
        with pytest.raises(ParameterError):
            small_config(system=System.DIFFERENCE1)

    def test_second_order_needs_first_moments(self):
        """difference2 uses m = 3 coefficients."""
        with pytest.raises(ParameterError):
            small_config(system=System.DIFFERENCE2, linear_context=EigenCoefficients(1.0))

    def test_grid_and_filter(self):
        cfg = small_config(alpha=0.2)
        assert cfg.grid == make_grid(64, 12.0)
        fp = cfg.filter_params(math.log(4.0))
        assert fp.effective_coefficient == pytest.approx(0.01)


class TestStability:
    """Test the CFL guard."""

    def test_initial_state_rejects_large_step(self):
        """The drift alone bounds dt by 0.5 h / (H/2)."""
        cfg = small_config(dt=0.05)
        solver = VorticitySolver(cfg)
        with pytest.raises(CFLViolationError):
            solver.initial_state(gaussian_G(cfg.grid))
        assert solver.stability_bound < 0.05

    def test_initial_state_records_bound(self):
        cfg = small_config()
        solver = VorticitySolver(cfg)
        state = solver.initial_state(gaussian_G(cfg.grid))
        assert 0.01 < solver.stability_bound <= 0.5 * cfg.grid.spacing / 6.0
        assert state.time == 0.0
        assert len(state.moment_history) == 1

    def test_physical_frame_has_no_drift_bound(self):
        """Without transport the physical bound is infinite."""
        cfg = small_config(frame=Frame.PHYSICAL, nonlinear=False, dt=1.0)
        solver = VorticitySolver(cfg)
        solver.initial_state(oseen_vortex(cfg.grid, 0.0))
        assert solver.stability_bound == math.inf

    def test_field_must_match_solver(self):
        cfg = small_config()
        solver = VorticitySolver(cfg)
        with pytest.raises(FieldError):
            solver.initial_state(oseen_vortex(cfg.grid, 0.0))
        with pytest.raises(FieldError):
            solver.initial_state(gaussian_G(make_grid(32, 12.0)))


class TestStepping:
    """Test single steps and runs."""

    def test_step_leaves_input_untouched(self):
        cfg = small_config()
        solver = VorticitySolver(cfg)
        state = solver.initial_state(gaussian_G(cfg.grid) + hermite_F(cfg.grid, 1))
        before = state.w.values.copy()
        nxt = solver.step(state)
        assert np.array_equal(state.w.values, before)
        assert nxt.time == pytest.approx(0.01)
        assert nxt.step_index == 1
        assert len(nxt.moment_history) == 2

    def test_mass_is_conserved(self):
        """Flux form and the integrating factor leave the k = 0 mode alone."""
        cfg = small_config(alpha=0.1)
        solver = VorticitySolver(cfg)
        w0 = random_localized_field(cfg.grid, np.random.default_rng(11))
        state = solver.initial_state(w0)
        result = solver.run_to(state, cfg.t_end)
        m0 = moments(w0).a
        assert abs(moments(result.state.w).a - m0) <= 1e-12 * max(1.0, abs(m0))

    def test_linear_flow_matches_profile(self):
        """Without transport, a G + b1 F1 evolves to a G + e^{-tau/2} b1 F1."""
        cfg = small_config(nonlinear=False, t_end=0.5, alpha=0.0)
        grid = cfg.grid
        coeffs = EigenCoefficients(0.5, 1.0, 0.0, 3)
        solver = VorticitySolver(cfg)
        state = solver.initial_state(profile(grid, coeffs, 0.0, 0.0))
        result = solver.run_to(state, 0.5)
        expected = profile(grid, coeffs, 0.5, 0.0)
        assert weighted_norm(result.state.w - expected, 2) / weighted_norm(expected, 2) < 1e-5
        assert moments(result.state.w).b1 == pytest.approx(-math.exp(-0.25), rel=1e-5)

    def test_physical_linear_flow_is_heat(self):
        """The physical frame without transport is the heat semigroup."""
        cfg = small_config(frame=Frame.PHYSICAL, nonlinear=False, t_end=0.1)
        grid = cfg.grid
        w0 = random_localized_field(grid, np.random.default_rng(12), frame=Frame.PHYSICAL)
        solver = VorticitySolver(cfg)
        result = solver.run_to(solver.initial_state(w0), 0.1)
        assert (result.state.w - heat_semigroup(w0, 0.1)).max_abs() < 1e-12

    def test_run_records_rows(self):
        """Rows at the start, every output_every steps and at the end."""
        cfg = small_config(t_end=0.1)
        solver = VorticitySolver(cfg)
        state = solver.initial_state(gaussian_G(cfg.grid))
        result = solver.run_to(state, 0.1, [moment_observer, lp_observer()])
        assert len(result.table.rows) == 3
        assert result.table.column("time") == pytest.approx([0.0, 0.05, 0.1])
        assert set(result.table.columns) == {"time", "mass", "b1", "b2", "l1", "l2", "linf"}
        assert result.state.time == pytest.approx(0.1)

    def test_uneven_final_step(self):
        """The last step is shortened to land on t_end."""
        cfg = small_config(t_end=0.025)
        solver = VorticitySolver(cfg)
        result = solver.run_to(solver.initial_state(gaussian_G(cfg.grid)), 0.025)
        assert result.state.time == 0.025
        assert result.state.step_index == 3

    def test_zero_span_keeps_initial_row(self):
        cfg = small_config(t_end=0.0)
        solver = VorticitySolver(cfg)
        result = solver.run_to(solver.initial_state(gaussian_G(cfg.grid)), 0.0, [mass_observer])
        assert len(result.table.rows) == 1

    def test_first_moments_decay_at_half_rate(self):
        """b_i(tau) = b_i(0) e^{-tau/2} under the full dynamics."""
        cfg = small_config(t_end=1.0, far_field=False)
        x1, x2 = cfg.grid.mesh
        w0 = ScalarField(cfg.grid, np.exp(-((x1 - 0.6) ** 2 / 2.42 + (x2 + 0.4) ** 2 / 1.28)))
        mom0 = moments(w0)
        solver = VorticitySolver(cfg)
        result = solver.run_to(solver.initial_state(w0), 1.0, [moment_observer])
        times = result.table.column("time")
        assert times[-1] == pytest.approx(1.0)
        for key, b0 in (("b1", mom0.b1), ("b2", mom0.b2)):
            err = max(abs(b - b0 * math.exp(-0.5 * t))
                      for t, b in zip(times, result.table.column(key)))
            assert err <= 1e-6 * abs(b0)

    @pytest.mark.slow
    def test_third_order_in_time(self):
        """Halving dt cuts the error against a dt/4 reference by at least 2^2.5."""
        grid = make_grid(64, 10.0)
        w0 = random_localized_field(grid, np.random.default_rng(5), frame=Frame.PHYSICAL) * 0.5
        finals = []
        for dt in (0.04, 0.02, 0.01):
            cfg = SimConfig(n_points=64, half_width=10.0, alpha=0.1, frame=Frame.PHYSICAL,
                            dt=dt, t_end=1.0, far_field=False, check_tail=False)
            solver = VorticitySolver(cfg)
            finals.append(solver.run_to(solver.initial_state(w0), 1.0).state.w)
        reference = finals[2]
        coarse = (finals[0] - reference).max_abs()
        fine = (finals[1] - reference).max_abs()
        assert coarse / fine >= 2.0 ** 2.5

    def test_end_before_start_rejected(self):
        cfg = small_config()
        solver = VorticitySolver(cfg)
        state = solver.initial_state(gaussian_G(cfg.grid), time=1.0)
        with pytest.raises(ParameterError):
            solver.run_to(state, 0.5)


class TestRightHandSide:
    """Test the scaled right-hand sides against closed forms."""

    @pytest.fixture
    def grid(self):
        return make_grid(128, 12.0)

    def test_gaussian_is_stationary(self, grid):
        """alpha = 0: G is a fixed point of the full system."""
        assert rhs_scaled(gaussian_G(grid), 0.0, 0.0).max_abs() < 1e-9

    @pytest.mark.parametrize("tau", [0.5, 1.0, 5.0])
    def test_gamma_moves_by_filter_decay(self, grid, tau):
        """d_tau Gamma = alpha^2 e^{-tau} Delta G solves the full system."""
        alpha = 0.1
        out = rhs_scaled(gamma_field(grid, tau, alpha), tau, alpha)
        expected = alpha ** 2 * math.exp(-tau) * basis(grid).lap_G.values
        assert np.max(np.abs(out.values - expected)) < 1e-9

    def test_difference2_forcing_on_zero(self, grid):
        """The second-order difference system is forced by -e^{-tau} v_c . grad Lambda_c."""
        alpha, tau = 0.1, 0.7
        ctx = EigenCoefficients(1.0, 1.0, -0.5, 3)
        out = rhs_scaled(ScalarField.zeros(grid), tau, alpha, System.DIFFERENCE2, ctx)
        b = basis(grid)
        v_c = ctx.b1 * b.vF[0] + ctx.b2 * b.vF[1]
        lambda_c = lambda_field(grid, 1, tau, alpha) * ctx.b1 + lambda_field(grid, 2, tau, alpha) * ctx.b2
        expected = -math.exp(-tau) * v_c.dot(gradient(lambda_c)).values
        assert np.max(np.abs(out.values - expected)) / np.max(np.abs(expected)) < 1e-8

    def test_forcing_sign_check_prefers_bilinear(self, grid):
        """Cross terms cancel, leaving the bilinear forcing."""
        ctx = EigenCoefficients(1.0, 1.0, -0.5, 3)
        residuals = forcing_sign_check(grid, ctx, 0.5, 0.1)
        assert set(residuals) == {"bilinear", "diagonal-minus", "diagonal-plus"}
        assert min(residuals, key=residuals.get) == "bilinear"
        assert residuals["bilinear"] < 1e-8


class TestObservers:
    """Test observer outputs."""

    def test_observer_keys(self):
        cfg = small_config()
        solver = VorticitySolver(cfg)
        state = solver.initial_state(gaussian_G(cfg.grid))
        assert moment_observer(state)["mass"] == pytest.approx(1.0, rel=1e-12)
        assert set(norm_observer(2)(state)) == {"norm_m2"}
        assert set(norm_observer(2, "size")(state)) == {"size"}
        assert mass_observer(state)["mass"] == pytest.approx(1.0, rel=1e-12)
        assert lp_observer([1.0])(state)["l1"] == pytest.approx(1.0, rel=1e-12)
