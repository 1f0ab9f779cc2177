"""
vche2d Operators

Biot-Savart inversion, Helmholtz filter, heat semigroup and the semigroup
generated by L = Delta + (1/2) xi . grad + I, all as Fourier multipliers or
closed-form compositions on the periodic grid.
"""

import math
from typing import Dict, Optional, Union

import numpy as np

from ..models.fields import Frame, Grid, ScalarField, VectorField
from ..models.params import FilterParams, SemigroupTime
from ..models.report import DecayReport
from ..utils.exceptions import ParameterError
from ..utils.logger import get_logger
from .eigenbasis import basis
from .norms import mapped_values, moments, weight
from .spectral import gradient, laplacian

logger = get_logger(__name__)

MEAN_REPORT_THRESHOLD = 1e-14

SEMIGROUP_METHODS = ("fourier", "dilation")


def _periodic_velocity(w: ScalarField, sink: Optional[DecayReport]) -> VectorField:
    grid = w.grid
    spec = w.spectrum().copy()
    mean = spec[0, 0].real / grid.n_points ** 2
    if abs(mean) > MEAN_REPORT_THRESHOLD:
        logger.debug("Projected out vorticity mean before inversion", mean=mean)
        if sink is not None:
            sink.add_warning("biot-savart-mean", "nonzero vorticity mean projected out",
                             value=abs(mean))
    spec[0, 0] = 0.0
    k_sq = grid.k_squared.copy()
    k_sq[0, 0] = 1.0
    # stream function psi = -w / |k|^2, u = (-d2 psi, d1 psi)
    psi = -spec / k_sq
    k1, k2 = grid.k_mesh
    return VectorField(
        ScalarField.from_spectrum(grid, -1j * k2 * psi, w.frame),
        ScalarField.from_spectrum(grid, 1j * k1 * psi, w.frame),
    )


def biot_savart(w: ScalarField, far_field: bool = False,
                sink: Optional[DecayReport] = None) -> VectorField:
    """Velocity whose curl is w.

    By default the mean is projected out and the periodic multiplier
    i k^perp / |k|^2 is applied; the result is spectrally divergence-free and
    its curl is w - mean(w). With ``far_field`` the mass and first moments of w
    are carried by the closed-form whole-plane velocities of G and F_i, and only
    the remainder (no mass, no first moments) is inverted on the periodic box.
    The far-field velocity is not periodic, so the spectral divergence and
    curl identities hold for it only approximately.
    """
    if not far_field:
        return _periodic_velocity(w, sink)

    b = basis(w.grid)
    mom = moments(w)
    c1, c2 = -mom.b1, -mom.b2
    remainder = w.with_values(w.values - mom.a * b.G.values
                              - c1 * b.F[0].values - c2 * b.F[1].values)
    velocity = _periodic_velocity(remainder, None)
    u1 = velocity.u1.values + mom.a * b.vG.u1.values \
        + c1 * b.vF[0].u1.values + c2 * b.vF[1].u1.values
    u2 = velocity.u2.values + mom.a * b.vG.u2.values \
        + c1 * b.vF[0].u2.values + c2 * b.vF[1].u2.values
    return VectorField(ScalarField(w.grid, u1, w.frame), ScalarField(w.grid, u2, w.frame))


def _filter_scalar(f: ScalarField, coefficient: float) -> ScalarField:
    if coefficient == 0.0:
        return f
    return ScalarField.from_spectrum(
        f.grid, f.spectrum() / (1.0 + coefficient * f.grid.k_squared), f.frame)


def helmholtz_filter(v: Union[ScalarField, VectorField],
                     fp: FilterParams) -> Union[ScalarField, VectorField]:
    """Apply (I - c Delta)^{-1}, c the effective coefficient."""
    c = fp.effective_coefficient
    if isinstance(v, VectorField):
        return VectorField(_filter_scalar(v.u1, c), _filter_scalar(v.u2, c))
    return _filter_scalar(v, c)


def filtered_velocity(w: ScalarField, fp: FilterParams, far_field: bool = False,
                      sink: Optional[DecayReport] = None) -> VectorField:
    """B(H(w)): Helmholtz filter followed by Biot-Savart."""
    return biot_savart(helmholtz_filter(w, fp), far_field=far_field, sink=sink)


def heat_semigroup(f: ScalarField, t: float) -> ScalarField:
    """e^{t Delta} f via the multiplier e^{-|k|^2 t}."""
    if not t >= 0:
        raise ParameterError("heat time must be nonnegative", {"t": t})
    if t == 0:
        return f.copy()
    return ScalarField.from_spectrum(f.grid, f.spectrum() * np.exp(-f.grid.k_squared * t),
                                     f.frame)


def heat_kernel(grid: Grid, t: float, frame: Frame = Frame.PHYSICAL) -> ScalarField:
    """Phi(x, t) = e^{-|x|^2/(4t)} / (4 pi t)."""
    if not t > 0:
        raise ParameterError("heat kernel time must be positive", {"t": t})
    values = np.exp(-grid.radius_squared / (4.0 * t)) / (4.0 * math.pi * t)
    return ScalarField(grid, values, frame)


def heat_kernel_lp_norm(p: float, t: float, dimension: int = 2) -> float:
    """|Phi(t)|_p from |Phi(t)|_p^p = 1 / (p^{n/2} (4 pi t)^{(p-1) n / 2})."""
    if not p >= 1:
        raise ParameterError("p must be >= 1", {"p": p})
    if not t > 0:
        raise ParameterError("heat kernel time must be positive", {"t": t})
    n = dimension
    if math.isinf(p):
        return (4.0 * math.pi * t) ** (-n / 2.0)
    power = 1.0 / (p ** (n / 2.0) * (4.0 * math.pi * t) ** ((p - 1.0) * n / 2.0))
    return power ** (1.0 / p)


def filter_bound_constant(m: float, alpha: float) -> float:
    """C with ||H g||_m^2 <= C ||g||_m^2 for the filter of length alpha (any tau >= 0).

    From ||w||_m^2 >= (1 - 4 m^2 alpha^2) ||omega||_m^2 when 4 m^2 alpha^2 < 1; the
    large-alpha branch bounds the inner ball separately.
    """
    if not m >= 0 or not alpha >= 0:
        raise ParameterError("m and alpha must be nonnegative", {"m": m, "alpha": alpha})
    s = 4.0 * m * m * alpha * alpha
    if s < 1.0:
        return 1.0 / (1.0 - s)
    return 2.0 * (1.0 + 2.0 ** (m - 1) * s ** m)


def filter_energy_balance(w: ScalarField, fp: FilterParams, m: float = 0.0) -> Dict[str, float]:
    """Both sides of the weighted filter energy identity

        ||w||_m^2 = ||omega||_m^2 + 2c ||grad omega||_m^2 + c^2 ||Lap omega||_m^2
                    - c int Lap(rho) omega^2,      rho = (1 + |xi|^2)^m,

    for omega = H(w). The last term vanishes for m = 0.
    """
    grid = w.grid
    c = fp.effective_coefficient
    omega = helmholtz_filter(w, fp)
    rho = weight(grid, m)
    r2 = grid.radius_squared
    lap_rho = 4.0 * m * weight(grid, m - 1.0) + 4.0 * m * (m - 1.0) * r2 * weight(grid, m - 2.0)
    grad = gradient(omega)
    lap = laplacian(omega).values
    area = grid.cell_area
    lhs = area * float(np.sum(rho * w.values ** 2))
    rhs = area * float(np.sum(
        rho * omega.values ** 2
        + 2.0 * c * rho * (grad.u1.values ** 2 + grad.u2.values ** 2)
        + c * c * rho * lap ** 2
        - c * lap_rho * omega.values ** 2))
    scale = max(abs(lhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / scale,
            "ratio": area * float(np.sum(rho * omega.values ** 2)) / scale}


def _fourier_semigroup(f: ScalarField, st: SemigroupTime) -> ScalarField:
    # (e^{tau L} f)^(k) = e^{-|k|^2 a(tau)} f^(e^{-tau/2} k), dilation done by a
    # non-uniform DFT of the samples
    grid = f.grid
    k = grid.wavenumbers
    kappa = math.exp(-0.5 * st.tau) * k
    transform = np.exp(-1j * np.outer(kappa, grid.points))
    contracted = transform @ f.values @ transform.T
    phase = np.exp(-1j * k * grid.half_width)
    spec = np.outer(phase, phase) * np.exp(-grid.k_squared * st.a_of_tau) * contracted
    return ScalarField.from_spectrum(grid, spec, f.frame)


def semigroup_L(f: ScalarField, st: SemigroupTime, method: str = "fourier",
                target: Optional[Grid] = None, outside: str = "error") -> ScalarField:
    """Evaluate e^{tau L} f = e^tau (e^{(e^tau - 1) Delta} f)(e^{tau/2} .).

    Args:
        f: Scaled-frame source field
        st: Semigroup time
        method: "fourier" performs the dilation on the spectrum and keeps the
            source grid; "dilation" applies the heat multiplier and evaluates
            the interpolant at dilated points of ``target``
        target: Output grid for the dilation method (defaults to f.grid)
        outside: Passed to the dilation resampling ("error" or "zero")

    Raises:
        DomainError: Dilation method with e^{tau/2} H_target beyond the source box
    """
    if method not in SEMIGROUP_METHODS:
        raise ParameterError(f"Unknown semigroup method '{method}'",
                             {"valid": list(SEMIGROUP_METHODS)})
    if st.tau == 0.0:
        return f.copy() if target is None else ScalarField(
            target, mapped_values(f, target, 1.0, outside), f.frame)
    if method == "fourier":
        return _fourier_semigroup(f, st)

    target = target or f.grid
    heated = heat_semigroup(f, math.expm1(st.tau))
    values = math.exp(st.tau) * mapped_values(heated, target, math.exp(0.5 * st.tau), outside)
    return ScalarField(target, values, f.frame)


def semigroup_L_direct(f: ScalarField, st: SemigroupTime,
                       target: Optional[Grid] = None) -> ScalarField:
    """Direct lattice quadrature of the kernel of e^{tau L}.

    (e^{tau L} f)(xi) = int (4 pi a)^{-1} e^{-|xi - eta e^{-tau/2}|^2 / (4a)} f(eta) d eta,
    a = 1 - e^{-tau}. The kernel is separable, so the sum is two matrix products.
    """
    target = target or f.grid
    if st.tau == 0.0:
        return ScalarField(target, mapped_values(f, target, 1.0), f.frame)
    a = st.a_of_tau
    shrink = math.exp(-0.5 * st.tau)
    diff = target.points[:, None] - shrink * f.grid.points[None, :]
    kernel = np.exp(-diff ** 2 / (4.0 * a))
    values = f.grid.cell_area / (4.0 * math.pi * a) * (kernel @ f.values @ kernel.T)
    return ScalarField(target, values, f.frame)
