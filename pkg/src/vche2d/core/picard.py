"""
vche2d Mild Solutions

Picard iteration of the Duhamel map for the physical-frame vorticity,

    v(t) = e^{t Delta} v0 - int_0^t div e^{(t-s) Delta} [u v](s) ds,   u = B(H_alpha(v)),

with the time integral by Gauss-Legendre collocation.
"""

from typing import List, Tuple

import numpy as np

from ..models.fields import Frame, ScalarField
from ..models.params import FilterParams
from ..utils.exceptions import ContractionError, FieldError, ParameterError
from ..utils.logger import get_logger
from .norms import lp_norm
from .operators import filtered_velocity, heat_semigroup
from .spectral import dealias

logger = get_logger(__name__)


def _lagrange_matrix(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """L[r, j] = l_j(points[r]) for the Lagrange basis on nodes."""
    out = np.ones((len(points), len(nodes)))
    for j, s_j in enumerate(nodes):
        for m, s_m in enumerate(nodes):
            if m != j:
                out[:, j] *= (points - s_m) / (s_j - s_m)
    return out


def _duhamel_weights(k_squared: np.ndarray, nodes: np.ndarray, targets: np.ndarray,
                     sub_nodes: int) -> np.ndarray:
    """W[q, j] = int_0^{T_q} e^{-|k|^2 (T_q - s)} l_j(s) ds as Fourier arrays."""
    x, w = np.polynomial.legendre.leggauss(sub_nodes)
    weights = np.empty((len(targets), len(nodes)) + k_squared.shape)
    for q, target in enumerate(targets):
        sigma = 0.5 * target * (x + 1.0)
        omega = 0.5 * target * w
        basis_at = _lagrange_matrix(nodes, sigma)
        for j in range(len(nodes)):
            acc = np.zeros_like(k_squared)
            for r in range(sub_nodes):
                acc += omega[r] * basis_at[r, j] * np.exp(-k_squared * (target - sigma[r]))
            weights[q, j] = acc
    return weights


def picard_mild_solve(w0: ScalarField, t: float, iterations: int = 30, alpha: float = 0.1,
                      nodes: int = 8, nonlinear: bool = True, tolerance: float = 1e-14,
                      far_field: bool = True, dealias_products: bool = True) -> ScalarField:
    """Fixed point of the Duhamel map at time t.

    Args:
        w0: Physical-frame initial vorticity
        t: Final time
        iterations: Maximum number of Picard sweeps
        alpha: Filter length
        nodes: Gauss-Legendre collocation nodes on [0, t]
        nonlinear: False forces the filtered velocity to zero
        tolerance: Stop once successive iterates differ by less than this
            times max(1, |w0|_2)

    Raises:
        ContractionError: If the distance between successive iterates grows
    """
    if w0.frame is not Frame.PHYSICAL:
        raise FieldError("picard_mild_solve expects a physical-frame field")
    if not t >= 0:
        raise ParameterError("time must be nonnegative", {"t": t})
    if iterations < 1 or nodes < 2:
        raise ParameterError("need at least one iteration and two nodes",
                             {"iterations": iterations, "nodes": nodes})
    if t == 0 or not nonlinear:
        return heat_semigroup(w0, t)

    grid = w0.grid
    fp = FilterParams.physical(alpha)
    k1, k2 = grid.k_mesh
    x, _ = np.polynomial.legendre.leggauss(nodes)
    s_nodes = 0.5 * t * (x + 1.0)
    targets = np.append(s_nodes, t)
    weights = _duhamel_weights(grid.k_squared, s_nodes, targets, 2 * nodes)
    free = [heat_semigroup(w0, float(target)).spectrum() for target in targets]

    iterates: List[np.ndarray] = list(free)
    distances: List[float] = []
    scale = max(1.0, lp_norm(w0, 2))

    for sweep in range(iterations):
        fluxes = []
        for j in range(nodes):
            v = ScalarField.from_spectrum(grid, iterates[j], Frame.PHYSICAL)
            u = filtered_velocity(v, fp, far_field)
            f1 = np.fft.fft2(u.u1.values * v.values)
            f2 = np.fft.fft2(u.u2.values * v.values)
            if dealias_products:
                f1, f2 = dealias(f1, grid), dealias(f2, grid)
            fluxes.append(1j * k1 * f1 + 1j * k2 * f2)

        updated = []
        for q in range(len(targets)):
            integral = sum(weights[q, j] * fluxes[j] for j in range(nodes))
            updated.append(free[q] - integral)

        distance = max(
            lp_norm(ScalarField.from_spectrum(grid, new - old, Frame.PHYSICAL), 2)
            for new, old in zip(updated, iterates))
        distances.append(distance)
        iterates = updated
        logger.debug("Picard sweep", sweep=sweep, distance=distance)

        if len(distances) >= 3 and distances[-1] > distances[-2] and distance > tolerance * scale:
            raise ContractionError("Picard iteration does not contract", distances,
                                   {"t": t, "alpha": alpha})
        if distance <= tolerance * scale:
            break

    logger.info("Picard solve finished", t=t, sweeps=len(distances),
                final_distance=distances[-1])
    return ScalarField.from_spectrum(grid, iterates[-1], Frame.PHYSICAL)


def picard_node_check(w0: ScalarField, t: float, alpha: float = 0.1,
                      nodes: int = 8) -> Tuple[float, ScalarField]:
    """L2 difference between solves with ``nodes`` and ``2 * nodes`` nodes."""
    coarse = picard_mild_solve(w0, t, alpha=alpha, nodes=nodes)
    fine = picard_mild_solve(w0, t, alpha=alpha, nodes=2 * nodes)
    return lp_norm(coarse - fine, 2), fine
