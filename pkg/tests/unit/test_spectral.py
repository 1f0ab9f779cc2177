"""
Unit tests for vche2d spectral calculus.
"""

import logging
import math

import numpy as np
import pytest

from src.vche2d.core.sampling import random_localized_field
from src.vche2d.core.spectral import (
    boundary_level,
    check_boundary_decay,
    curl,
    dealias,
    dealiased_product_spectrum,
    divergence,
    evaluate_on_axes,
    gradient,
    integrate,
    laplacian,
    make_grid,
    resample,
    spectral_energy,
)
from src.vche2d.models.fields import Frame, ScalarField, VectorField
from src.vche2d.models.report import DecayReport
from src.vche2d.utils.exceptions import FieldError, GridError


@pytest.fixture
def grid():
    return make_grid(64, 10.0)


def gaussian(grid, c1=0.0, c2=0.0):
    x1, x2 = grid.mesh
    return ScalarField(grid, np.exp(-((x1 - c1) ** 2 + (x2 - c2) ** 2)))


class TestGrid:
    """Test grid construction."""

    def test_points_and_spacing(self, grid):
        """Collocation points start at -H with spacing 2H/n."""
        assert grid.spacing == pytest.approx(20.0 / 64)
        assert grid.points[0] == -10.0
        assert grid.points[-1] == pytest.approx(10.0 - grid.spacing)
        assert grid.mesh[0].shape == (64, 64)

    @pytest.mark.parametrize("n", [8, 48, 100, 0])
    def test_rejects_bad_sizes(self, n):
        """Only powers of two from 16 upwards are accepted."""
        with pytest.raises(GridError):
            make_grid(n, 10.0)

    def test_rejects_nonpositive_half_width(self):
        """The box must have positive size."""
        with pytest.raises(GridError):
            make_grid(64, 0.0)
        with pytest.raises(GridError):
            make_grid(64, -1.0)

    def test_nyquist_zeroed_for_odd_derivatives(self, grid):
        """Odd wavenumbers drop the Nyquist mode, even ones keep it."""
        assert grid.odd_wavenumbers[32] == 0.0
        assert grid.wavenumbers[32] != 0.0
        assert grid.k_squared[0, 32] == pytest.approx(grid.wavenumbers[32] ** 2)

    def test_dealias_mask_keeps_two_thirds(self, grid):
        """Modes up to floor(n/3) survive, higher ones are zeroed."""
        spectrum = np.ones((64, 64), dtype=complex)
        cut = dealias(spectrum, grid)
        assert cut[21, 21] == 1.0
        assert cut[0, 22] == 0.0
        assert cut[22, 0] == 0.0
        assert cut[-21, -21] == 1.0


class TestDerivatives:
    """Test spectral differentiation."""

    def test_gradient_of_gaussian(self, grid):
        """d_i e^{-r^2} = -2 x_i e^{-r^2}."""
        f = gaussian(grid)
        x1, x2 = grid.mesh
        grad = gradient(f)
        assert np.max(np.abs(grad.u1.values + 2 * x1 * f.values)) < 1e-9
        assert np.max(np.abs(grad.u2.values + 2 * x2 * f.values)) < 1e-9

    def test_laplacian_of_gaussian(self, grid):
        """Delta e^{-r^2} = (4 r^2 - 4) e^{-r^2}."""
        f = gaussian(grid, 0.5, -0.3)
        x1, x2 = grid.mesh
        r2 = (x1 - 0.5) ** 2 + (x2 + 0.3) ** 2
        expected = (4 * r2 - 4) * f.values
        assert np.max(np.abs(laplacian(f).values - expected)) < 1e-8

    def test_curl_of_gradient_vanishes(self, grid):
        """curl grad f = 0 to round-off."""
        assert curl(gradient(gaussian(grid, 1.0))).max_abs() < 1e-12

    def test_skew_gradient_is_divergence_free(self, grid):
        """(-d2 psi, d1 psi) has zero divergence."""
        grad = gradient(gaussian(grid, -1.0, 0.5))
        v = VectorField(-grad.u2, grad.u1)
        assert divergence(v).max_abs() < 1e-12


class TestQuadrature:
    """Test lattice quadrature and boundary checks."""

    def test_gaussian_mass(self):
        """Unit-mass Gaussian integrates to one."""
        grid = make_grid(64, 12.0)
        g = ScalarField(grid, np.exp(-grid.radius_squared / 4) / (4 * math.pi))
        assert integrate(g) == pytest.approx(1.0, abs=1e-12)

    def test_parseval(self, grid):
        """spectral_energy matches the lattice sum of squares."""
        f = gaussian(grid, 0.3)
        direct = grid.cell_area * float(np.sum(f.values ** 2))
        assert spectral_energy(f) == pytest.approx(direct, rel=1e-12)

    def test_boundary_level_of_localized_field(self, grid):
        """A narrow Gaussian has decayed at the box boundary."""
        f = gaussian(grid)
        assert boundary_level(f) < 1e-12
        assert check_boundary_decay(f)

    def test_boundary_warning_recorded(self, grid):
        """A constant field violates the decay precondition once per call."""
        report = DecayReport("test")
        f = ScalarField(grid, np.ones((64, 64)))
        assert not check_boundary_decay(f, report, label="constant")
        assert not check_boundary_decay(f, report, label="constant")
        assert len(report.warnings) == 1
        assert report.warnings[0].category == "boundary-decay"
        assert report.warnings[0].count == 2

    def test_boundary_warning_logged_not_raised(self, grid, caplog):
        """The violation is a debug record carrying the boundary ratio."""
        caplog.set_level(logging.DEBUG, logger="vche2d.core.spectral")
        f = ScalarField(grid, np.ones((64, 64)))
        assert not check_boundary_decay(f, label="constant", time=0.5)
        records = [r for r in caplog.records if r.name == "vche2d.core.spectral"]
        assert records[-1].getMessage() == "Boundary decay precondition violated"
        assert records[-1].extra_fields["boundary_ratio"] == pytest.approx(1.0)
        assert records[-1].extra_fields["time"] == 0.5

    def test_quadrature_of_undecayed_field(self, grid):
        """Quadrature still evaluates when the decay check fires."""
        f = ScalarField(grid, np.ones((64, 64)))
        assert integrate(f) == pytest.approx(400.0)

    def test_zero_field_has_zero_level(self, grid):
        """No division by zero for the zero field."""
        assert boundary_level(ScalarField.zeros(grid)) == 0.0


class TestInterpolation:
    """Test evaluation of the trigonometric interpolant."""

    def test_reproduces_grid_values(self, grid):
        """Evaluating at the collocation points returns the samples."""
        f = gaussian(grid, 0.7, -0.2)
        values = evaluate_on_axes(f, grid.points, grid.points)
        assert np.max(np.abs(values - f.values)) < 1e-12

    def test_off_grid_points(self, grid):
        """A smooth field is recovered between collocation points."""
        f = gaussian(grid)
        x = np.linspace(-2.0, 2.0, 17) + 0.013
        values = evaluate_on_axes(f, x, x)
        expected = np.exp(-(x[None, :] ** 2 + x[:, None] ** 2))
        assert np.max(np.abs(values - expected)) < 1e-9

    def test_resample_onto_smaller_box(self, grid):
        """Resampling keeps the frame and matches the closed form."""
        target = make_grid(32, 4.0)
        out = resample(gaussian(grid), target)
        assert out.grid == target
        assert out.frame is Frame.SCALED
        assert np.max(np.abs(out.values - np.exp(-target.radius_squared))) < 1e-9


class TestFieldArithmetic:
    """Test field compatibility checks."""

    def test_mismatched_grids_rejected(self, grid):
        """Fields on different grids cannot be combined."""
        other = make_grid(32, 10.0)
        with pytest.raises(FieldError):
            ScalarField.zeros(grid) + ScalarField.zeros(other)

    def test_mismatched_frames_rejected(self, grid):
        """Fields in different frames cannot be combined."""
        with pytest.raises(FieldError):
            ScalarField.zeros(grid) - ScalarField.zeros(grid, Frame.PHYSICAL)

    def test_complex_values_rejected(self, grid):
        """Fields are real."""
        with pytest.raises(FieldError):
            ScalarField(grid, np.zeros((64, 64), dtype=complex))

    def test_shape_checked(self, grid):
        """Values must match the grid shape."""
        with pytest.raises(FieldError):
            ScalarField(grid, np.zeros((32, 32)))


class TestTransforms:
    """Test the discrete transform and the 2/3 rule."""

    def test_transform_roundtrip(self, grid):
        rng = np.random.default_rng(21)
        for _ in range(100):
            f = random_localized_field(grid, rng)
            back = ScalarField.from_spectrum(grid, f.spectrum(), f.frame)
            assert np.max(np.abs(back.values - f.values)) <= 1e-12 * max(1.0, f.max_abs())

    def test_dealias_is_idempotent(self, grid):
        spectrum = random_localized_field(grid, np.random.default_rng(22)).spectrum()
        once = dealias(spectrum, grid)
        assert np.array_equal(dealias(once, grid), once)

    def test_product_matches_truncated_convolution(self):
        """Band-limited inputs: the dealiased product is the plain convolution cut to the band."""
        n, band = 16, 5
        small = make_grid(n, 4.0)
        rng = np.random.default_rng(23)
        index = (np.fft.fftfreq(n) * n).astype(int)
        inside = np.abs(index) <= band

        def band_limited():
            spec = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            return np.fft.ifft2(np.where(np.outer(inside, inside), spec, 0.0)).real

        a, b = band_limited(), band_limited()
        fa, fb = np.fft.fft2(a), np.fft.fft2(b)
        expected = np.zeros((n, n), dtype=complex)
        modes = [int(k) for k in index[inside]]
        for p1 in modes:
            for p2 in modes:
                for q1 in modes:
                    for q2 in modes:
                        s1, s2 = p1 + q1, p2 + q2
                        if abs(s1) <= band and abs(s2) <= band:
                            expected[s1 % n, s2 % n] += fa[p1 % n, p2 % n] * fb[q1 % n, q2 % n]
        expected /= n * n
        product = dealiased_product_spectrum(a, b, small)
        assert np.max(np.abs(product - expected)) <= 1e-12 * np.max(np.abs(expected))
