"""
vche2d Eigenbasis

Closed-form special fields of the scaled problem: the Gaussian G, its
derivatives F_i, their un-filtered versions Gamma and Lambda_i, the
associated velocities v^G and v^{F_i}, the Oseen vortex, and the moment
projections onto X1 = span{G} (m = 2) or span{G, F1, F2} (m = 3).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from ..models.fields import Frame, Grid, ScalarField, VectorField
from ..models.params import EigenCoefficients
from ..utils.exceptions import FieldError, ParameterError
from .norms import moments
from .spectral import laplacian

# below this value of r^2/4 the derivative of g is evaluated by its series
_SERIES_THRESHOLD = 0.05


def _g(s: np.ndarray) -> np.ndarray:
    """g(s) = (1 - e^{-s/4}) / (2 pi s), g(0) = 1/(8 pi)."""
    s = np.asarray(s, dtype=np.float64)
    safe = np.where(s > 0.0, s, 1.0)
    out = -np.expm1(-safe / 4.0) / (2.0 * np.pi * safe)
    return np.where(s > 0.0, out, 1.0 / (8.0 * np.pi))


def _g_prime(s: np.ndarray) -> np.ndarray:
    """g'(s) = [(s/4) e^{-s/4} - (1 - e^{-s/4})] / (2 pi s^2), g'(0) = -1/(64 pi)."""
    s = np.asarray(s, dtype=np.float64)
    u = s / 4.0
    small = u < _SERIES_THRESHOLD
    safe = np.where(small, 1.0, s)
    direct = ((safe / 4.0) * np.exp(-safe / 4.0) + np.expm1(-safe / 4.0)) \
        / (2.0 * np.pi * safe ** 2)
    # sum_{n>=2} (-1)^{n-1} (n-1)/n! u^{n-2}, divided by 32 pi
    series = (-0.5 + u / 3.0 - u ** 2 / 8.0 + u ** 3 / 30.0 - u ** 4 * 5.0 / 720.0) \
        / (32.0 * np.pi)
    return np.where(small, series, direct)


def gaussian_G(grid: Grid) -> ScalarField:
    """G = e^{-|xi|^2/4} / (4 pi)."""
    return ScalarField(grid, np.exp(-grid.radius_squared / 4.0) / (4.0 * np.pi), Frame.SCALED)


def _check_index(i: int) -> int:
    if i not in (1, 2):
        raise ParameterError("component index must be 1 or 2", {"i": i})
    return i


def hermite_F(grid: Grid, i: int) -> ScalarField:
    """F_i = d_i G = -(xi_i / 2) G."""
    xi = grid.mesh[_check_index(i) - 1]
    return ScalarField(grid, -0.5 * xi * gaussian_G(grid).values, Frame.SCALED)


def oseen_vortex(grid_x: Grid, t: float) -> ScalarField:
    """Omega(x, t) = e^{-|x|^2 / (4(1+t))} / (4 pi (1+t)) in the physical frame."""
    if not t >= 0:
        raise ParameterError("time must be nonnegative", {"t": t})
    scale = 1.0 + t
    values = np.exp(-grid_x.radius_squared / (4.0 * scale)) / (4.0 * np.pi * scale)
    return ScalarField(grid_x, values, Frame.PHYSICAL)


def velocity_vG(grid: Grid) -> VectorField:
    """Closed-form velocity of G: g(|xi|^2) (-xi2, xi1)."""
    x1, x2 = grid.mesh
    g = _g(grid.radius_squared)
    return VectorField(ScalarField(grid, -g * x2, Frame.SCALED),
                       ScalarField(grid, g * x1, Frame.SCALED))


def velocity_vF(grid: Grid, i: int) -> VectorField:
    """Velocity of F_i, the derivative d_i v^G in closed form."""
    x1, x2 = grid.mesh
    xi = grid.mesh[_check_index(i) - 1]
    s = grid.radius_squared
    g = _g(s)
    radial = 2.0 * xi * _g_prime(s)
    u1 = radial * (-x2)
    u2 = radial * x1
    if i == 1:
        u2 = u2 + g
    else:
        u1 = u1 - g
    return VectorField(ScalarField(grid, u1, Frame.SCALED), ScalarField(grid, u2, Frame.SCALED))


@dataclass(frozen=True)
class Basis:
    """Per-grid cache of the closed-form fields. Treat as read-only."""
    grid: Grid
    G: ScalarField
    F: Tuple[ScalarField, ScalarField]
    lap_G: ScalarField
    lap_F: Tuple[ScalarField, ScalarField]
    vG: VectorField
    vF: Tuple[VectorField, VectorField]


@lru_cache(maxsize=16)
def basis(grid: Grid) -> Basis:
    G = gaussian_G(grid)
    F = (hermite_F(grid, 1), hermite_F(grid, 2))
    return Basis(
        grid=grid,
        G=G,
        F=F,
        lap_G=laplacian(G),
        lap_F=(laplacian(F[0]), laplacian(F[1])),
        vG=velocity_vG(grid),
        vF=(velocity_vF(grid, 1), velocity_vF(grid, 2)),
    )


def _filter_weight(tau: float, alpha: float) -> float:
    if not tau >= 0 or not alpha >= 0:
        raise ParameterError("tau and alpha must be nonnegative", {"tau": tau, "alpha": alpha})
    return alpha * alpha * math.exp(-tau)


def gamma_field(grid: Grid, tau: float, alpha: float) -> ScalarField:
    """Gamma(., tau) = G - alpha^2 e^{-tau} Delta G."""
    c = _filter_weight(tau, alpha)
    b = basis(grid)
    return b.G.with_values(b.G.values - c * b.lap_G.values)


def lambda_field(grid: Grid, i: int, tau: float, alpha: float) -> ScalarField:
    """Lambda_i(., tau) = F_i - alpha^2 e^{-tau} Delta F_i."""
    c = _filter_weight(tau, alpha)
    b = basis(grid)
    k = _check_index(i) - 1
    return b.F[k].with_values(b.F[k].values - c * b.lap_F[k].values)


def profile(grid: Grid, coeffs: EigenCoefficients, tau: float, alpha: float) -> ScalarField:
    """a Gamma + e^{-tau/2} (b1 Lambda_1 + b2 Lambda_2), the exact linear solution."""
    values = coeffs.a * gamma_field(grid, tau, alpha).values
    if coeffs.has_first_order:
        decay = math.exp(-0.5 * tau)
        values = values + decay * (coeffs.b1 * lambda_field(grid, 1, tau, alpha).values
                                   + coeffs.b2 * lambda_field(grid, 2, tau, alpha).values)
    return ScalarField(grid, values, Frame.SCALED)


def project(f: ScalarField, m: int) -> Tuple[EigenCoefficients, ScalarField]:
    """Split f = P1 f + g by matching mass (and first moments for m = 3).

    Returns:
        (coefficients of the X1 part, remainder g in X2)
    """
    if f.frame is not Frame.SCALED:
        raise FieldError("project expects a scaled-frame field")
    if m not in (2, 3):
        raise ParameterError("projection is defined for m = 2 or 3", {"m": m})
    b = basis(f.grid)
    mom = moments(f)
    if m == 2:
        coeffs = EigenCoefficients(mom.a, 0.0, 0.0, 2)
        return coeffs, f.with_values(f.values - mom.a * b.G.values)
    # moments(F_i) = (0, -delta_i1, -delta_i2)
    coeffs = EigenCoefficients(mom.a, -mom.b1, -mom.b2, 3)
    remainder = (f.values - coeffs.a * b.G.values
                 - coeffs.b1 * b.F[0].values - coeffs.b2 * b.F[1].values)
    return coeffs, f.with_values(remainder)


def unfiltered_profile_physical(grid_x: Grid, t: float, a: float, alpha: float) -> ScalarField:
    """a Gamma(., log(1 + t)) mapped to the physical frame: a (Omega - alpha^2 Delta Omega)."""
    if not t >= 0:
        raise ParameterError("time must be nonnegative", {"t": t})
    s = 1.0 + t
    xi2 = grid_x.radius_squared / s
    g = np.exp(-0.25 * xi2) / (4.0 * math.pi)
    lap_g = (0.25 * xi2 - 1.0) * g
    c = alpha * alpha / s
    return ScalarField(grid_x, a * (g - c * lap_g) / s, Frame.PHYSICAL)
