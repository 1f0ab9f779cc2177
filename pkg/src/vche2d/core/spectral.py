"""
vche2d Spectral Core

Grid construction, FFT-based differentiation, 2/3-rule dealiasing,
lattice quadrature and spectral interpolation at off-grid points.
"""

from typing import Optional

import numpy as np

from ..models.fields import Frame, Grid, ScalarField, VectorField
from ..models.report import DecayReport
from ..utils.logger import get_logger

logger = get_logger(__name__)

BOUNDARY_DECAY_TOLERANCE = 1e-12


def make_grid(n_points: int, half_width: float) -> Grid:
    """Build the collocation grid x_j = -H + j*(2H/n) on both axes.

    Raises:
        GridError: If n_points is not a power of two >= 16 or half_width <= 0
    """
    return Grid(n_points, half_width)


def gradient(f: ScalarField) -> VectorField:
    """Spectral gradient; odd-derivative Nyquist modes are dropped."""
    grid = f.grid
    k1, k2 = grid.k_mesh
    spec = f.spectrum()
    return VectorField(
        ScalarField.from_spectrum(grid, 1j * k1 * spec, f.frame),
        ScalarField.from_spectrum(grid, 1j * k2 * spec, f.frame),
    )


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField.from_spectrum(f.grid, -f.grid.k_squared * f.spectrum(), f.frame)


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    k1, k2 = grid.k_mesh
    spec = 1j * k1 * v.u1.spectrum() + 1j * k2 * v.u2.spectrum()
    return ScalarField.from_spectrum(grid, spec, v.frame)


def curl(v: VectorField) -> ScalarField:
    """Scalar curl d1 u2 - d2 u1."""
    grid = v.grid
    k1, k2 = grid.k_mesh
    spec = 1j * k1 * v.u2.spectrum() - 1j * k2 * v.u1.spectrum()
    return ScalarField.from_spectrum(grid, spec, v.frame)


def dealias(spectrum: np.ndarray, grid: Grid) -> np.ndarray:
    """Zero modes with |k_i| above floor(n/3)*pi/H on either axis."""
    return np.where(grid.dealias_mask, spectrum, 0.0)


def dealias_field(f: ScalarField) -> ScalarField:
    return ScalarField.from_spectrum(f.grid, dealias(f.spectrum(), f.grid), f.frame)


def dealiased_product_spectrum(a: np.ndarray, b: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectrum of the pointwise product a*b with the 2/3 rule applied."""
    return dealias(np.fft.fft2(a * b), grid)


def boundary_level(f: ScalarField) -> float:
    """Largest |f| on the outermost ring of the box, relative to max |f|."""
    values = np.abs(f.values)
    peak = float(values.max())
    if peak == 0.0:
        return 0.0
    ring = max(values[0, :].max(), values[-1, :].max(), values[:, 0].max(), values[:, -1].max())
    return float(ring) / peak


def check_boundary_decay(f: ScalarField,
                         sink: Optional[DecayReport] = None,
                         tolerance: float = BOUNDARY_DECAY_TOLERANCE,
                         label: str = "field",
                         time: Optional[float] = None) -> bool:
    """Record a warning when the field has not decayed at the box boundary."""
    level = boundary_level(f)
    if level <= tolerance:
        return True
    logger.debug("Boundary decay precondition violated", label=label,
                 boundary_ratio=level, tolerance=tolerance, time=time)
    if sink is not None:
        sink.add_warning("boundary-decay", f"{label} exceeds {tolerance:g} at the boundary",
                         time=time, value=level)
    return False


def integrate(f: ScalarField, sink: Optional[DecayReport] = None) -> float:
    """Lattice quadrature spacing^2 * sum(values)."""
    check_boundary_decay(f, sink, label="integrand")
    return float(f.grid.cell_area * np.sum(f.values))


def spectral_energy(f: ScalarField) -> float:
    """Parseval counterpart of spacing^2 * sum(f^2)."""
    n = f.grid.n_points
    return float(f.grid.cell_area * np.sum(np.abs(f.spectrum()) ** 2) / (n * n))


def _evaluation_matrix(grid: Grid, points: np.ndarray) -> np.ndarray:
    """Rows e^{i k (x + H)} for each target point; Nyquist column as a cosine."""
    y = np.asarray(points, dtype=np.float64) + grid.half_width
    k = grid.wavenumbers
    matrix = np.exp(1j * np.outer(y, k))
    nyquist = grid.n_points // 2
    matrix[:, nyquist] = np.cos(k[nyquist] * y)
    return matrix


def evaluate_on_axes(f: ScalarField, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of f on the tensor grid x1 x x2.

    Returns:
        Array of shape (len(x2), len(x1))
    """
    grid = f.grid
    e1 = _evaluation_matrix(grid, x1)
    e2 = _evaluation_matrix(grid, x2)
    n = grid.n_points
    return (e2 @ f.spectrum() @ e1.T).real / (n * n)


def resample(f: ScalarField, target: Grid, scale: float = 1.0,
             frame: Optional[Frame] = None) -> ScalarField:
    """Evaluate f at scale * x for every collocation point x of the target grid."""
    points = scale * target.points
    values = evaluate_on_axes(f, points, points)
    return ScalarField(target, values, frame or f.frame)
