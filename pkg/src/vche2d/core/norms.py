"""
vche2d Norms and Frames

Weighted L^2(m) norms, Lebesgue norms, moments and the change of
variables between the physical frame (x, t) and the scaled frame (xi, tau).
"""

import math
from typing import Optional, Tuple

import numpy as np

from ..models.fields import Frame, Grid, ScalarField
from ..models.params import MomentSet, validate_weight
from ..models.report import DecayReport
from ..utils.exceptions import DomainError, FieldError, ParameterError
from ..utils.logger import get_logger
from .spectral import boundary_level, check_boundary_decay, evaluate_on_axes

logger = get_logger(__name__)

# Source tail level below which points mapped outside the box may be zero-filled
TAIL_FILL_TOLERANCE = 1e-10


def weight(grid: Grid, m: float) -> np.ndarray:
    """b^{2m} = (1 + |xi|^2)^m on the grid."""
    return (1.0 + grid.radius_squared) ** m


def weighted_norm(f: ScalarField, m: float, sink: Optional[DecayReport] = None) -> float:
    """sqrt(int b^{2m} f^2) by lattice quadrature."""
    m = validate_weight(m)
    density = f.with_values(weight(f.grid, m) * f.values ** 2)
    check_boundary_decay(density, sink, label=f"b^{2 * m:g} f^2")
    return math.sqrt(f.grid.cell_area * float(np.sum(density.values)))


def lp_norm(f: ScalarField, p: float) -> float:
    """(sum |f|^p spacing^2)^{1/p}, or max |f| for p = inf."""
    if not p >= 1:
        raise ParameterError("p must be >= 1", {"p": p})
    values = np.abs(f.values)
    if math.isinf(p):
        return float(values.max())
    if p == 2:
        return math.sqrt(f.grid.cell_area * float(np.sum(f.values ** 2)))
    peak = float(values.max())
    if peak == 0.0:
        return 0.0
    # normalize before powering to avoid underflow for large p
    total = f.grid.cell_area * float(np.sum((values / peak) ** p))
    return peak * total ** (1.0 / p)


def moments(f: ScalarField, sink: Optional[DecayReport] = None) -> MomentSet:
    """Mass a = int f and first moments b_i = int xi_i f."""
    x1, x2 = f.grid.mesh
    area = f.grid.cell_area
    check_boundary_decay(f.with_values(np.hypot(x1, x2) * f.values), sink, label="xi f")
    return MomentSet(
        a=area * float(np.sum(f.values)),
        b1=area * float(np.sum(x1 * f.values)),
        b2=area * float(np.sum(x2 * f.values)),
    )


def embedding_constant(grid: Grid, m: float) -> float:
    """C = (int b^{-2m})^{1/2}, so that |f|_1 <= C ||f||_m on the lattice."""
    m = validate_weight(m)
    return math.sqrt(grid.cell_area * float(np.sum(weight(grid, -m))))


def mapped_values(f: ScalarField, target: Grid, scale: float,
                  outside: str = "error") -> np.ndarray:
    """Values of f at scale * x over the target collocation points.

    Args:
        f: Source field
        target: Grid whose points are mapped into the source box
        scale: Dilation factor applied to target coordinates
        outside: "error" rejects points leaving the source box; "zero" fills
            them with zero provided the source has decayed at its boundary

    Raises:
        DomainError: If mapped points leave the box and cannot be zero-filled
    """
    source = f.grid
    points = scale * target.points
    inside = (points >= -source.half_width - 1e-12) & \
             (points <= source.half_width - source.spacing + 1e-12)
    if inside.all():
        return evaluate_on_axes(f, points, points)

    details = {"scale": scale, "source_half_width": source.half_width,
               "mapped_extent": float(np.max(np.abs(points)))}
    if outside != "zero":
        raise DomainError("Mapped points leave the source box", details)
    level = boundary_level(f)
    if level > TAIL_FILL_TOLERANCE:
        details["boundary_level"] = level
        raise DomainError("Mapped points leave the box and the source has not decayed", details)

    values = np.zeros((target.n_points, target.n_points))
    idx = np.flatnonzero(inside)
    if idx.size:
        lo, hi = idx[0], idx[-1] + 1
        values[lo:hi, lo:hi] = evaluate_on_axes(f, points[lo:hi], points[lo:hi])
    return values


def to_scaled(v: ScalarField, t: float, target: Grid,
              outside: str = "error") -> Tuple[ScalarField, float]:
    """w(xi, tau) = (1 + t) v(xi sqrt(1 + t), t) with tau = ln(1 + t)."""
    if v.frame is not Frame.PHYSICAL:
        raise FieldError("to_scaled expects a physical-frame field")
    if not t >= 0:
        raise ParameterError("time must be nonnegative", {"t": t})
    stretch = math.sqrt(1.0 + t)
    values = (1.0 + t) * mapped_values(v, target, stretch, outside)
    return ScalarField(target, values, Frame.SCALED), math.log1p(t)


def from_scaled(w: ScalarField, tau: float, target: Grid,
                outside: str = "error") -> Tuple[ScalarField, float]:
    """v(x, t) = w(x / sqrt(1 + t), ln(1 + t)) / (1 + t) with t = e^tau - 1."""
    if w.frame is not Frame.SCALED:
        raise FieldError("from_scaled expects a scaled-frame field")
    if not tau >= 0:
        raise ParameterError("scaled time must be nonnegative", {"tau": tau})
    t = math.expm1(tau)
    stretch = math.exp(-0.5 * tau)
    values = mapped_values(w, target, stretch, outside) * math.exp(-tau)
    return ScalarField(target, values, Frame.PHYSICAL), t
