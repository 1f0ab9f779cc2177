"""
vche2d Sampling

Random smooth, exponentially localized fields for property checks and
Lipschitz sampling.
"""

from typing import Tuple

import numpy as np

from ..models.fields import Frame, Grid, ScalarField
from .eigenbasis import project
from .norms import weighted_norm


def random_localized_field(grid: Grid, rng: np.random.Generator, bumps: int = 3,
                           max_center: float = 2.5,
                           width_range: Tuple[float, float] = (0.9, 1.2),
                           frame: Frame = Frame.SCALED) -> ScalarField:
    """Sum of anisotropic Gaussians with random centres, widths and signs."""
    x1, x2 = grid.mesh
    values = np.zeros((grid.n_points, grid.n_points))
    for _ in range(bumps):
        c1, c2 = rng.uniform(-max_center, max_center, size=2)
        s1, s2 = rng.uniform(*width_range, size=2)
        amplitude = rng.normal()
        values += amplitude * np.exp(-(x1 - c1) ** 2 / (2 * s1 ** 2) - (x2 - c2) ** 2 / (2 * s2 ** 2))
    return ScalarField(grid, values, frame)


def random_x2_field(grid: Grid, rng: np.random.Generator, m: int, norm: float,
                    **kwargs) -> ScalarField:
    """Random field with the X1 part removed, rescaled to ||f||_m = norm."""
    _, remainder = project(random_localized_field(grid, rng, **kwargs), m)
    current = weighted_norm(remainder, m)
    return remainder * (norm / current)
