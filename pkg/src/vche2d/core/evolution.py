"""
vche2d Evolution

Time integration of the vorticity systems in the physical and the scaled
frame. Diffusion is carried exactly by an integrating factor; drift,
advection and forcing terms are advanced with a third-order Runge-Kutta
scheme. All transport terms are evaluated in flux form so the mean mode is
untouched by the explicit part.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..models.fields import Frame, Grid, ScalarField, VectorField
from ..models.params import EigenCoefficients, FilterParams, MomentSet
from ..models.report import DecayReport, SeriesTable
from ..utils.exceptions import (
    CFLViolationError,
    FieldError,
    NumericalInstabilityError,
    ParameterError,
)
from ..utils.logger import get_logger
from .eigenbasis import basis, gamma_field, lambda_field, profile
from .norms import lp_norm, moments, weighted_norm
from .operators import filtered_velocity
from .spectral import check_boundary_decay, dealias, gradient, integrate, laplacian, make_grid

CFL_SAFETY = 0.5
TAIL_TOLERANCE = 1e-10


class System(Enum):
    """Evolved system."""
    FULL = "full"
    LINEARIZED = "linearized"
    DIFFERENCE1 = "difference1"
    DIFFERENCE2 = "difference2"


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``linear_context`` holds (a, b1, b2) frozen from the initial data; b_i are
    the multipliers of F_i. ``nonlinear=False`` drops every transport term,
    leaving the linear flow (Delta in the physical frame, L in the scaled one).
    """
    n_points: int = 256
    half_width: float = 12.0
    alpha: float = 0.1
    frame: Frame = Frame.SCALED
    system: System = System.FULL
    dt: float = 0.005
    t_end: float = 8.0
    dealias: bool = True
    linear_context: Optional[EigenCoefficients] = None
    output_every: int = 10
    far_field: bool = True
    nonlinear: bool = True
    check_tail: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be positive", {"dt": self.dt})
        if not self.t_end >= 0:
            raise ParameterError("t_end must be nonnegative", {"t_end": self.t_end})
        if not self.alpha >= 0:
            raise ParameterError("alpha must be nonnegative", {"alpha": self.alpha})
        if self.output_every < 1:
            raise ParameterError("output_every must be >= 1", {"output_every": self.output_every})
        if self.frame is Frame.PHYSICAL and self.system is not System.FULL:
            raise ParameterError("only the full system is evolved in the physical frame",
                                 {"system": self.system.value})
        if self.system is not System.FULL and self.linear_context is None:
            raise ParameterError("system requires a linear context",
                                 {"system": self.system.value})
        if self.system is System.DIFFERENCE2 and self.linear_context.m != 3:
            raise ParameterError("difference2 requires m = 3 coefficients")

    @property
    def grid(self) -> Grid:
        return make_grid(self.n_points, self.half_width)

    def filter_params(self, time: float) -> FilterParams:
        if self.frame is Frame.SCALED:
            return FilterParams.scaled(self.alpha, time)
        return FilterParams.physical(self.alpha)


@dataclass
class SimState:
    """Evolved unknown with its time, filter setting and moment history."""
    frame: Frame
    time: float
    w: ScalarField
    alpha: float
    step_index: int = 0
    moment_history: List[MomentSet] = field(default_factory=list)
    far_field: bool = True
    _velocity: Optional[VectorField] = field(default=None, repr=False)

    @property
    def filter_params(self) -> FilterParams:
        if self.frame is Frame.SCALED:
            return FilterParams.scaled(self.alpha, self.time)
        return FilterParams.physical(self.alpha)

    @property
    def velocity(self) -> VectorField:
        """B(H(w)) at the current filter setting, computed on first access."""
        if self._velocity is None:
            self._velocity = filtered_velocity(self.w, self.filter_params, self.far_field)
        return self._velocity


Observer = Callable[[SimState], Mapping[str, float]]


@dataclass
class RunResult:
    """Final state of a run plus the observer table."""
    state: SimState
    table: SeriesTable


class VorticitySolver:
    """Integrating-factor RK3 stepper for one SimConfig."""

    def __init__(self, config: SimConfig, sink: Optional[DecayReport] = None):
        self.config = config
        self.grid = config.grid
        self.sink = sink
        self.logger = get_logger(f"{__name__}.VorticitySolver")
        self.stability_bound: Optional[float] = None
        self._scaled = config.frame is Frame.SCALED
        self._drift_speed = 0.5 * self.grid.half_width if self._scaled else 0.0

    # -- right-hand side -------------------------------------------------

    def _flux_divergence(self, velocity: VectorField, q: np.ndarray) -> np.ndarray:
        """Spectrum of div(u q), products dealiased when configured."""
        k1, k2 = self.grid.k_mesh
        flux1 = np.fft.fft2(velocity.u1.values * q)
        flux2 = np.fft.fft2(velocity.u2.values * q)
        if self.config.dealias:
            flux1 = dealias(flux1, self.grid)
            flux2 = dealias(flux2, self.grid)
        return 1j * k1 * flux1 + 1j * k2 * flux2

    def _drift(self, values: np.ndarray) -> np.ndarray:
        """Spectrum of (1/2) div(xi w) = (1/2) xi . grad w + w."""
        x1, x2 = self.grid.mesh
        k1, k2 = self.grid.k_mesh
        return 0.5 * (1j * k1 * np.fft.fft2(x1 * values) + 1j * k2 * np.fft.fft2(x2 * values))

    def transport_terms(self, w: ScalarField, time: float) -> Tuple[np.ndarray, float]:
        """Spectrum of the explicit transport/coupling/forcing terms and the
        largest advecting speed."""
        cfg = self.config
        zero = np.zeros((self.grid.n_points, self.grid.n_points), dtype=np.complex128)
        if not cfg.nonlinear:
            return zero, 0.0
        fp = cfg.filter_params(time)
        ctx = cfg.linear_context
        b = basis(self.grid)

        if cfg.system is System.FULL:
            omega = filtered_velocity(w, fp, cfg.far_field, self.sink)
            return -self._flux_divergence(omega, w.values), omega.max_speed()

        a = ctx.a
        gamma = gamma_field(self.grid, time, cfg.alpha).values
        if cfg.system is System.LINEARIZED:
            eta = filtered_velocity(w, fp, cfg.far_field, self.sink)
            total = a * self._flux_divergence(eta, gamma) + a * self._flux_divergence(b.vG, w.values)
            speed = abs(a) * (eta.max_speed() + b.vG.max_speed())
            return -total, speed

        phi = filtered_velocity(w, fp, cfg.far_field, self.sink)
        if cfg.system is System.DIFFERENCE1:
            omega = phi + a * b.vG
            total = self._flux_divergence(omega, w.values) + a * self._flux_divergence(phi, gamma)
            return -total, omega.max_speed()

        decay = math.exp(-0.5 * time)
        v_c = ctx.b1 * b.vF[0] + ctx.b2 * b.vF[1]
        lambda_c = (ctx.b1 * lambda_field(self.grid, 1, time, cfg.alpha).values
                    + ctx.b2 * lambda_field(self.grid, 2, time, cfg.alpha).values)
        psi = a * gamma + decay * lambda_c
        omega = phi + a * b.vG + decay * v_c
        total = (self._flux_divergence(omega, w.values)
                 + self._flux_divergence(phi, psi)
                 + math.exp(-time) * self._flux_divergence(v_c, lambda_c))
        return -total, omega.max_speed()

    def explicit_terms(self, w: ScalarField, time: float) -> Tuple[np.ndarray, float]:
        """Everything except Delta: drift (scaled frame) plus transport."""
        terms, speed = self.transport_terms(w, time)
        if self._scaled:
            terms = terms + self._drift(w.values)
        return terms, speed

    def rhs(self, w: ScalarField, time: float) -> ScalarField:
        """Full right-hand side as a field."""
        self._check_field(w)
        terms, _ = self.explicit_terms(w, time)
        spec = terms - self.grid.k_squared * w.spectrum()
        return ScalarField.from_spectrum(self.grid, spec, w.frame)

    # -- stepping --------------------------------------------------------

    def _check_field(self, w: ScalarField) -> None:
        if w.grid != self.grid or w.frame is not self.config.frame:
            raise FieldError("Field does not match the solver grid/frame",
                             {"grid": w.grid, "frame": w.frame.name})

    def cfl_bound(self, advecting_speed: float) -> float:
        speed = advecting_speed + self._drift_speed
        if speed == 0.0:
            return math.inf
        return CFL_SAFETY * self.grid.spacing / speed

    def initial_state(self, w0: ScalarField, time: float = 0.0) -> SimState:
        """Wrap initial data and record the stability bound for it."""
        self._check_field(w0)
        state = SimState(self.config.frame, float(time), w0.copy(), self.config.alpha,
                         far_field=self.config.far_field)
        state.moment_history.append(moments(w0))
        _, speed = self.explicit_terms(w0, state.time)
        self.stability_bound = self.cfl_bound(speed)
        if self.config.dt > self.stability_bound:
            raise CFLViolationError("dt exceeds the stability bound of the initial data",
                                    {"dt": self.config.dt, "bound": self.stability_bound})
        return state

    def _field(self, spec: np.ndarray) -> ScalarField:
        return ScalarField.from_spectrum(self.grid, spec, self.config.frame)

    def step(self, state: SimState, dt: Optional[float] = None) -> SimState:
        """Advance one step; the input state is left untouched.

        Raises:
            CFLViolationError: dt above the advective bound at the step start
            NumericalInstabilityError: non-finite values after the step
        """
        h = self.config.dt if dt is None else float(dt)
        if not h > 0:
            raise ParameterError("step size must be positive", {"dt": h})
        t0 = state.time
        ksq = self.grid.k_squared
        half = np.exp(-ksq * (0.5 * h))
        full = half * half

        w0 = state.w.spectrum()
        n1, speed = self.explicit_terms(state.w, t0)
        bound = self.cfl_bound(speed)
        if h > bound:
            self.logger.warning("Step rejected by CFL bound", time=t0, dt=h, bound=bound)
            if self.sink is not None:
                self.sink.add_warning("cfl", "step rejected by CFL bound", time=t0, value=h / bound)
            raise CFLViolationError("dt exceeds the CFL bound",
                                    {"time": t0, "dt": h, "bound": bound})

        wa = half * (w0 + 0.5 * h * n1)
        n2, _ = self.explicit_terms(self._field(wa), t0 + 0.5 * h)
        wb = full * w0 - h * full * n1 + 2.0 * h * half * n2
        n3, _ = self.explicit_terms(self._field(wb), t0 + h)
        w1 = full * w0 + (h / 6.0) * (full * n1 + 4.0 * half * n2 + n3)

        new_w = self._field(w1)
        if not new_w.is_finite():
            self.logger.error("Non-finite values after step", time=t0, step=state.step_index)
            raise NumericalInstabilityError("Non-finite values detected",
                                            {"time": t0, "step": state.step_index, "dt": h})
        history = list(state.moment_history)
        history.append(moments(new_w))
        return SimState(state.frame, t0 + h, new_w, state.alpha, state.step_index + 1,
                        history, state.far_field)

    def run_to(self, state: SimState, t_end: float,
               observers: Sequence[Observer] = ()) -> RunResult:
        """Step from state.time to t_end, calling observers every
        ``output_every`` steps and at the end."""
        cfg = self.config
        start = state.time
        span = t_end - start
        if span < -1e-12:
            raise ParameterError("t_end lies before the current time",
                                 {"time": start, "t_end": t_end})
        n_steps = max(0, int(math.ceil(span / cfg.dt - 1e-9)))

        table: Optional[SeriesTable] = None

        def record(s: SimState) -> None:
            nonlocal table
            row: Dict[str, float] = {"time": s.time}
            for observer in observers:
                row.update(observer(s))
            if table is None:
                table = SeriesTable("run", list(row.keys()))
            table.add_row(row)
            if cfg.check_tail:
                check_boundary_decay(s.w, self.sink, TAIL_TOLERANCE, label="evolved field",
                                     time=s.time)

        record(state)
        for k in range(n_steps):
            target = t_end if k == n_steps - 1 else start + (k + 1) * cfg.dt
            state = self.step(state, target - state.time)
            state = SimState(state.frame, target, state.w, state.alpha, state.step_index,
                             state.moment_history, state.far_field)
            if (k + 1) % cfg.output_every == 0 or k == n_steps - 1:
                record(state)
        self.logger.debug("Run finished", system=cfg.system.value, steps=n_steps, time=state.time)
        return RunResult(state, table)


def rhs_scaled(w: ScalarField, tau: float, alpha: float,
               system: System = System.FULL,
               context: Optional[EigenCoefficients] = None,
               dealias_products: bool = True) -> ScalarField:
    """Right-hand side of a scaled-frame system at time tau."""
    config = SimConfig(n_points=w.grid.n_points, half_width=w.grid.half_width, alpha=alpha,
                       frame=Frame.SCALED, system=system, linear_context=context,
                       dealias=dealias_products)
    return VorticitySolver(config).rhs(w, tau)


def forcing_sign_check(grid: Grid, coeffs: EigenCoefficients, tau: float,
                       alpha: float) -> Dict[str, float]:
    """Residuals of candidate second-order forcings against the exact one.

    The exact forcing is -(omega_psi . grad psi + psi_tau - L psi) for
    psi = a Gamma + e^{-tau/2}(b1 Lambda_1 + b2 Lambda_2), evaluated on the grid.
    Returned residuals are max-norm differences relative to its max.
    """
    logger = get_logger(f"{__name__}.forcing_sign_check")
    b = basis(grid)
    decay = math.exp(-0.5 * tau)
    c = alpha * alpha * math.exp(-tau)
    psi = profile(grid, coeffs, tau, alpha)
    lambdas = (lambda_field(grid, 1, tau, alpha), lambda_field(grid, 2, tau, alpha))

    psi_tau = (coeffs.a * c * b.lap_G.values
               + decay * sum(coef * (c * lap.values - 0.5 * lam.values)
                             for coef, lap, lam in zip((coeffs.b1, coeffs.b2), b.lap_F, lambdas)))
    x1, x2 = grid.mesh
    drift = gradient(psi)
    l_psi = laplacian(psi).values + psi.values + 0.5 * (x1 * drift.u1.values + x2 * drift.u2.values)
    omega_psi = coeffs.a * b.vG + decay * (coeffs.b1 * b.vF[0] + coeffs.b2 * b.vF[1])
    exact = -(omega_psi.dot(drift).values + psi_tau - l_psi)

    def advect(v: VectorField, q: ScalarField) -> np.ndarray:
        return v.dot(gradient(q)).values

    scale = math.exp(-tau)
    d1 = advect(b.vF[0], lambdas[0])
    d2 = advect(b.vF[1], lambdas[1])
    lambda_c = lambdas[0] * coeffs.b1 + lambdas[1] * coeffs.b2
    v_c = coeffs.b1 * b.vF[0] + coeffs.b2 * b.vF[1]
    candidates = {
        "bilinear": -scale * advect(v_c, lambda_c),
        "diagonal-minus": -scale * (coeffs.b1 ** 2 * d1 - coeffs.b2 ** 2 * d2),
        "diagonal-plus": -scale * (coeffs.b1 ** 2 * d1 + coeffs.b2 ** 2 * d2),
    }
    peak = float(np.max(np.abs(exact))) or 1.0
    residuals = {name: float(np.max(np.abs(exact - cand))) / peak
                 for name, cand in candidates.items()}
    best = min(residuals, key=residuals.get)
    logger.info("Second-order forcing check", tau=tau, best=best, **residuals)
    return residuals


# -- observers ------------------------------------------------------------

def moment_observer(state: SimState) -> Dict[str, float]:
    mom = moments(state.w)
    return {"mass": mom.a, "b1": mom.b1, "b2": mom.b2}


def norm_observer(m: float, name: Optional[str] = None) -> Observer:
    label = name or f"norm_m{m:g}"

    def observe(state: SimState) -> Dict[str, float]:
        return {label: weighted_norm(state.w, m)}
    return observe


def distance_observer(reference: Callable[[float], ScalarField], m: float,
                      name: str) -> Observer:
    """||w - reference(time)||_m."""
    def observe(state: SimState) -> Dict[str, float]:
        return {name: weighted_norm(state.w - reference(state.time), m)}
    return observe


def lp_observer(ps: Iterable[float] = (1.0, 2.0, math.inf)) -> Observer:
    ps = tuple(ps)

    def observe(state: SimState) -> Dict[str, float]:
        return {("linf" if math.isinf(p) else f"l{p:g}"): lp_norm(state.w, p) for p in ps}
    return observe


def mass_observer(state: SimState) -> Dict[str, float]:
    return {"mass": integrate(state.w)}
