"""Numerical core: spectral calculus, operators, time stepping and Lyapunov-Perron checks."""

from .eigenbasis import (
    basis,
    gamma_field,
    gaussian_G,
    hermite_F,
    lambda_field,
    oseen_vortex,
    profile,
    project,
    velocity_vF,
    velocity_vG,
)
from .evolution import SimConfig, SimState, System, VorticitySolver, rhs_scaled
from .norms import from_scaled, lp_norm, moments, to_scaled, weighted_norm
from .operators import (
    biot_savart,
    filtered_velocity,
    heat_semigroup,
    helmholtz_filter,
    semigroup_L,
    semigroup_L_direct,
)
from .picard import picard_mild_solve
from .spectral import curl, dealias, divergence, gradient, laplacian, make_grid

__all__ = [
    "basis", "gamma_field", "gaussian_G", "hermite_F", "lambda_field", "oseen_vortex",
    "profile", "project", "velocity_vF", "velocity_vG",
    "SimConfig", "SimState", "System", "VorticitySolver", "rhs_scaled",
    "from_scaled", "lp_norm", "moments", "to_scaled", "weighted_norm",
    "biot_savart", "filtered_velocity", "heat_semigroup", "helmholtz_filter",
    "semigroup_L", "semigroup_L_direct",
    "picard_mild_solve",
    "curl", "dealias", "divergence", "gradient", "laplacian", "make_grid",
]
