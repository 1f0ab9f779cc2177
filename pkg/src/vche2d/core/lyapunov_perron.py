"""
vche2d Lyapunov-Perron Machinery

Unit-time shifted flows of the difference systems, the remainder maps R_n
and forcing S_n, the E^mu sequence norm, the discrete Lyapunov-Perron
residual and empirical Lipschitz/contraction estimates.
"""

import math
import threading
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models.fields import Frame, Grid, ScalarField
from ..models.params import EigenCoefficients, MomentSet, SemigroupTime
from ..models.report import DecayReport
from ..utils.exceptions import FieldError, ParameterError, PreconditionError
from ..utils.logger import get_logger
from .eigenbasis import basis, lambda_field, profile, project
from .evolution import SimConfig, System, VorticitySolver
from .norms import moments, weighted_norm
from .operators import semigroup_L
from .sampling import random_localized_field, random_x2_field
from .spectral import dealias

MASS_TOLERANCE = 1e-10
MIN_LIPSCHITZ_SAMPLES = 20
FORCING_NODES = 8
CONSTANT_INFLATION = 1.1

logger = get_logger(__name__)


def _mu_interval(m: int) -> Tuple[float, float]:
    return (0.0, 0.5) if m == 2 else (0.5, 1.0)


class LPContext:
    """Fixed data of a Lyapunov-Perron check.

    The background full solution at integer times is computed on demand and
    cached; everything else is immutable after construction.
    """

    def __init__(self, w0: ScalarField, m: int, mu: float, alpha: float, r0: float,
                 dt: float = 0.01, nonlinear: bool = True, dealias_products: bool = True,
                 sink: Optional[DecayReport] = None):
        if w0.frame is not Frame.SCALED:
            raise FieldError("LPContext expects scaled-frame data")
        if m not in (2, 3):
            raise ParameterError("m must be 2 or 3", {"m": m})
        lo, hi = _mu_interval(m)
        if not lo < mu < hi:
            raise ParameterError(f"mu must lie in ({lo}, {hi}) for m = {m}", {"mu": mu})
        if not r0 > 0:
            raise ParameterError("r0 must be positive", {"r0": r0})
        norm = weighted_norm(w0, m)
        if norm > r0 * (1.0 + 1e-12):
            raise PreconditionError("initial data exceeds the size bound r0",
                                    {"norm": norm, "r0": r0, "m": m})
        self.w0 = w0
        self.m = m
        self.mu = float(mu)
        self.alpha = float(alpha)
        self.r0 = float(r0)
        self.dt = float(dt)
        self.nonlinear = nonlinear
        self.dealias_products = dealias_products
        self.sink = sink
        self.moments: MomentSet = moments(w0)
        self.coeffs, _ = project(w0, m)
        self._background: Dict[int, ScalarField] = {0: w0}
        self._lock = threading.Lock()
        self.logger = get_logger(f"{__name__}.LPContext")

    @property
    def grid(self) -> Grid:
        return self.w0.grid

    def config(self, system: System) -> SimConfig:
        if system is System.DIFFERENCE2:
            context = self.coeffs
        else:
            context = EigenCoefficients(self.coeffs.a, 0.0, 0.0, 2)
        return SimConfig(n_points=self.grid.n_points, half_width=self.grid.half_width,
                         alpha=self.alpha, frame=Frame.SCALED, system=system, dt=self.dt,
                         dealias=self.dealias_products, linear_context=context,
                         output_every=10 ** 9, nonlinear=self.nonlinear, check_tail=False)

    def solver(self, system: System) -> VorticitySolver:
        return VorticitySolver(self.config(system), self.sink)

    def psi_profile(self, tau: float) -> ScalarField:
        """a Gamma, plus the e^{-tau/2} Lambda part when m = 3."""
        return profile(self.grid, self.coeffs, tau, self.alpha)

    def initial_difference(self) -> ScalarField:
        """f0 = w0 - psi(0); lies in X2 and reproduces w - psi for all times."""
        return self.w0 - self.psi_profile(0.0)

    def background(self, n: int) -> ScalarField:
        """Full-system solution at integer time n."""
        with self._lock:
            if n in self._background:
                return self._background[n]
            start = max(k for k in self._background if k <= n)
            solver = VorticitySolver(replace(self.config(System.DIFFERENCE1), system=System.FULL,
                                             linear_context=None), self.sink)
            state = solver.initial_state(self._background[start], float(start))
            for k in range(start + 1, n + 1):
                state = solver.run_to(state, float(k)).state
                self._background[k] = state.w
            return self._background[n]


@dataclass
class SemiorbitSequence:
    """Integer-time sequence f_0, ..., f_N."""
    entries: List[ScalarField]
    mu: float
    m: int

    def __post_init__(self):
        if not self.entries:
            raise ParameterError("semiorbit needs at least one entry")
        grid = self.entries[0].grid
        for entry in self.entries:
            if entry.grid != grid:
                raise FieldError("semiorbit entries must share a grid")

    def norms(self) -> List[float]:
        return [weighted_norm(f, self.m) for f in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _check_mass(f0: ScalarField, first_moments: bool) -> None:
    mom = moments(f0)
    bad = abs(mom.a) > MASS_TOLERANCE
    if first_moments:
        bad = bad or abs(mom.b1) > MASS_TOLERANCE or abs(mom.b2) > MASS_TOLERANCE
    if bad:
        raise PreconditionError("initial difference must lie in X2",
                                {"mass": mom.a, "b1": mom.b1, "b2": mom.b2})


def _flow(f0: ScalarField, n: int, tau: float, ctx: LPContext, system: System) -> ScalarField:
    if not 0.0 <= tau <= 1.0:
        raise ParameterError("flow time must lie in [0, 1]", {"tau": tau})
    solver = ctx.solver(system)
    state = solver.initial_state(f0, float(n))
    return solver.run_to(state, float(n) + tau).state.w


def theta_flow(f0: ScalarField, n: int, tau: float, ctx: LPContext) -> ScalarField:
    """Difference dynamics about a Gamma over [n, n + tau]."""
    _check_mass(f0, first_moments=False)
    return _flow(f0, n, tau, ctx, System.DIFFERENCE1)


def psi_flow(f0: ScalarField, n: int, tau: float, ctx: LPContext) -> ScalarField:
    """Second-order difference dynamics over [n, n + tau]; m = 3 contexts only."""
    if ctx.m != 3:
        raise PreconditionError("psi_flow requires an m = 3 context", {"m": ctx.m})
    _check_mass(f0, first_moments=True)
    return _flow(f0, n, tau, ctx, System.DIFFERENCE2)


def _forcing(tau: float, ctx: LPContext) -> ScalarField:
    """-e^{-tau} div(v^{F_c} Lambda_c) as used by the difference2 stepper."""
    grid = ctx.grid
    b = basis(grid)
    c = ctx.coeffs
    v_c = c.b1 * b.vF[0] + c.b2 * b.vF[1]
    lambda_c = (c.b1 * lambda_field(grid, 1, tau, ctx.alpha).values
                + c.b2 * lambda_field(grid, 2, tau, ctx.alpha).values)
    k1, k2 = grid.k_mesh
    f1 = np.fft.fft2(v_c.u1.values * lambda_c)
    f2 = np.fft.fft2(v_c.u2.values * lambda_c)
    if ctx.dealias_products:
        f1, f2 = dealias(f1, grid), dealias(f2, grid)
    spec = -math.exp(-tau) * (1j * k1 * f1 + 1j * k2 * f2)
    return ScalarField.from_spectrum(grid, spec, Frame.SCALED)


def forcing_S(n: int, ctx: LPContext, nodes: int = FORCING_NODES) -> ScalarField:
    """S_n = int_0^1 e^{(1 - s) L} forcing(n + s) ds by Gauss-Legendre quadrature."""
    if ctx.m != 3:
        raise PreconditionError("forcing_S requires an m = 3 context", {"m": ctx.m})
    if not ctx.coeffs.has_first_order or not ctx.nonlinear:
        return ScalarField.zeros(ctx.grid)
    x, w = np.polynomial.legendre.leggauss(nodes)
    sigma = 0.5 * (x + 1.0)
    total = np.zeros((ctx.grid.n_points, ctx.grid.n_points))
    for s, weight in zip(sigma, 0.5 * w):
        propagated = semigroup_L(_forcing(n + s, ctx), SemigroupTime(1.0 - s))
        total += weight * propagated.values
    return ScalarField(ctx.grid, total, Frame.SCALED)


def remainder_R(f0: ScalarField, n: int, ctx: LPContext) -> ScalarField:
    """Nonlinear part of the unit-time flow: flow(f0)(1) - e^L f0 (- S_n for m = 3)."""
    linear = semigroup_L(f0, SemigroupTime(1.0))
    if ctx.m == 2:
        return theta_flow(f0, n, 1.0, ctx) - linear
    return psi_flow(f0, n, 1.0, ctx) - linear - forcing_S(n, ctx)


def emu_norm(seq: SemiorbitSequence) -> float:
    """sup_n e^{mu n} ||f_n||_m."""
    return max(math.exp(seq.mu * n) * norm for n, norm in enumerate(seq.norms()))


def compute_semiorbit(ctx: LPContext, steps: int,
                      f0: Optional[ScalarField] = None) -> SemiorbitSequence:
    """f_{n+1} = Theta_n(f_n)(1) (Psi_n for m = 3), starting from the X2 part of the data."""
    if steps < 0:
        raise ParameterError("steps must be nonnegative", {"steps": steps})
    entries = [f0 if f0 is not None else ctx.initial_difference()]
    flow = theta_flow if ctx.m == 2 else psi_flow
    for n in range(steps):
        entries.append(flow(entries[-1], n, 1.0, ctx))
        ctx.logger.debug("Semiorbit step", n=n + 1, norm=weighted_norm(entries[-1], ctx.m))
    return SemiorbitSequence(entries, ctx.mu, ctx.m)


@dataclass
class LPResidual:
    """Residual of the discrete Lyapunov-Perron equation."""
    residual: float
    tail_bound: float
    per_step: List[float] = field(default_factory=list)
    remainder_norms: List[float] = field(default_factory=list)


def _x1_part(coeffs: EigenCoefficients, grid: Grid, power: float) -> np.ndarray:
    """e^{power L} applied to a G + b1 F1 + b2 F2 through the eigenvalues."""
    b = basis(grid)
    values = coeffs.a * b.G.values
    if coeffs.m == 3:
        decay = math.exp(-0.5 * power)
        values = values + decay * (coeffs.b1 * b.F[0].values + coeffs.b2 * b.F[1].values)
    return values


def lp_residual(seq: SemiorbitSequence, ctx: LPContext, truncation: Optional[int] = None,
                recompute: bool = True) -> LPResidual:
    """max_n || f_n - [e^{nL} P2 f_0 - sum_{j>=n} e^{(n-j-1)L} P1 Q_j
    + sum_{j<n} e^{(n-j-1)L} P2 Q_j] ||_m with Q_j = R_j(f_j) (+ S_j for m = 3).

    Args:
        seq: Computed semiorbit f_0..f_N
        ctx: Context the semiorbit was computed in
        truncation: J, the end of the forward sum (None for an infinite tail)
        recompute: Evaluate R_j with fresh flows instead of differencing the sequence
    """
    entries = seq.entries
    N = len(entries) - 1
    J = truncation
    if J is not None and J < N:
        raise ParameterError("truncation must be at least the sequence length",
                             {"truncation": J, "length": N})
    grid = ctx.grid
    m = ctx.m

    # Q_j for j < N
    q_fields: List[np.ndarray] = []
    for j in range(N):
        if not ctx.nonlinear:
            q = np.zeros((grid.n_points, grid.n_points))
        else:
            # R_j + S_j is the full nonlinear part of one unit step
            flow = theta_flow if m == 2 else psi_flow
            advanced = flow(entries[j], j, 1.0, ctx) if recompute else entries[j + 1]
            q = (advanced - semigroup_L(entries[j], SemigroupTime(1.0))).values
        q_fields.append(q)

    projections = [project(ScalarField(grid, q, Frame.SCALED), m) for q in q_fields]
    q_norms = [weighted_norm(ScalarField(grid, q, Frame.SCALED), m) for q in q_fields]
    p1_norms = [weighted_norm(ScalarField(grid, q - g.values, Frame.SCALED), m)
                for q, (_, g) in zip(q_fields, projections)]

    growth = math.exp(0.5) if m == 3 else 1.0
    if N >= 2 and q_norms[-2] > 0:
        ratio = q_norms[-1] / q_norms[-2]
    else:
        ratio = 0.0

    _, p2_f0 = project(entries[0], m)
    residuals: List[float] = []
    tails: List[float] = []
    for n in range(N + 1):
        rhs = semigroup_L(p2_f0, SemigroupTime(float(n))).values
        for j in range(n, N):
            coeffs, _ = projections[j]
            rhs = rhs - _x1_part(coeffs, grid, float(n - j - 1))
        for j in range(n):
            _, g = projections[j]
            rhs = rhs + semigroup_L(g, SemigroupTime(float(n - j - 1))).values
        residuals.append(weighted_norm(ScalarField(grid, entries[n].values - rhs,
                                                   Frame.SCALED), m))

        # geometric tail for j >= N from the last observed remainder
        if N == 0 or (J is not None and J == N) or p1_norms[-1] == 0.0:
            tails.append(0.0)
            continue
        q = ratio * growth
        if q >= 1.0:
            tails.append(math.inf)
            continue
        if J is None:
            geometric = q / (1.0 - q)
        else:
            geometric = q * (1.0 - q ** (J - N)) / (1.0 - q)
        tails.append(growth ** (N - n) * p1_norms[-1] * geometric)

    result = LPResidual(max(residuals), max(tails), residuals, q_norms)
    ctx.logger.info("Lyapunov-Perron residual", residual=result.residual,
                    tail_bound=result.tail_bound, length=N)
    return result


def estimate_stepping_tolerance(ctx: LPContext, f0: Optional[ScalarField] = None) -> float:
    """||flow_dt(f0)(1) - flow_{dt/2}(f0)(1)||_m over one unit step."""
    f0 = f0 if f0 is not None else ctx.initial_difference()
    system = System.DIFFERENCE1 if ctx.m == 2 else System.DIFFERENCE2
    coarse = _flow(f0, 0, 1.0, ctx, system)
    fine_ctx = LPContext(ctx.w0, ctx.m, ctx.mu, ctx.alpha, ctx.r0, ctx.dt / 2.0,
                         ctx.nonlinear, ctx.dealias_products, ctx.sink)
    fine = _flow(f0, 0, 1.0, fine_ctx, system)
    return weighted_norm(coarse - fine, ctx.m)


def measure_projection_constants(ctx: LPContext, samples: int = 50, seed: int = 0,
                                 powers: Sequence[int] = (1, 2, 3, 4, 5)) -> Tuple[float, float]:
    """Measured bounds C1, C2 of the projected semigroups, inflated by 10 %.

    C1 bounds ||e^{-jL} P1 g|| e^{-jk/2} / ||g|| and C2 bounds
    ||e^{jL} P2 g|| e^{j(k+1)/2} / ||g||, with k = m - 2.
    """
    rng = np.random.default_rng(seed)
    grid = ctx.grid
    k = ctx.m - 2
    c1 = c2 = 0.0
    for _ in range(samples):
        g = random_localized_field(grid, rng)
        norm = weighted_norm(g, ctx.m)
        coeffs, p2 = project(g, ctx.m)
        for j in powers:
            back = ScalarField(grid, _x1_part(coeffs, grid, -float(j)), Frame.SCALED)
            c1 = max(c1, weighted_norm(back, ctx.m) * math.exp(-0.5 * j * k) / norm)
            forward = semigroup_L(p2, SemigroupTime(float(j)))
            c2 = max(c2, weighted_norm(forward, ctx.m) * math.exp(0.5 * j * (k + 1)) / norm)
    return CONSTANT_INFLATION * c1, CONSTANT_INFLATION * c2


def contraction_margin(m: int, mu: float, c1: float, c2: float) -> float:
    """Left-hand side of the contraction inequality, compared with 1 / Lip(R)."""
    if m == 2:
        return c1 / (1.0 - math.exp(-mu)) + c2 / (math.exp(-mu) - math.exp(-0.5))
    return c1 / (math.exp(-0.5) - math.exp(-mu)) + c2 / (math.exp(-mu) - math.exp(-1.0))


@dataclass
class LipschitzEstimate:
    """Sampled Lipschitz constant of R_n with the contraction verdict."""
    lip_r: float
    contraction_ok: bool
    c1: float
    c2: float
    margin: float
    samples: List[Dict[str, float]] = field(default_factory=list)


def estimate_lipschitz(ctx: LPContext, samples: int = 20, seed: int = 0,
                       steps: Sequence[int] = (0, 1, 2, 3, 4),
                       constant_samples: int = 50) -> LipschitzEstimate:
    """Max over random pairs in X2 (norms <= r0) and n of
    ||R_n(f) - R_n(g)||_m / ||f - g||_m."""
    if samples < MIN_LIPSCHITZ_SAMPLES:
        raise ParameterError(f"need at least {MIN_LIPSCHITZ_SAMPLES} sample pairs",
                             {"samples": samples})
    rng = np.random.default_rng(seed)
    rows: List[Dict[str, float]] = []
    lip = 0.0
    for index in range(samples):
        f0 = random_x2_field(ctx.grid, rng, ctx.m, ctx.r0 * rng.uniform(0.2, 1.0))
        g0 = random_x2_field(ctx.grid, rng, ctx.m, ctx.r0 * rng.uniform(0.2, 1.0))
        distance = weighted_norm(f0 - g0, ctx.m)
        for n in steps:
            ratio = weighted_norm(remainder_R(f0, n, ctx) - remainder_R(g0, n, ctx),
                                  ctx.m) / distance
            rows.append({"pair": float(index), "n": float(n), "ratio": ratio})
            lip = max(lip, ratio)

    c1, c2 = measure_projection_constants(ctx, constant_samples, seed)
    margin = contraction_margin(ctx.m, ctx.mu, c1, c2)
    ok = lip == 0.0 or margin < 1.0 / lip
    ctx.logger.info("Lipschitz estimate", lip_r=lip, c1=c1, c2=c2, margin=margin,
                    contraction_ok=ok)
    return LipschitzEstimate(lip, ok, c1, c2, margin, rows)


def equivalence_error(ctx: LPContext, seq: SemiorbitSequence) -> float:
    """max_n ||f_n - (w(n) - psi(n))||_m against the cached full solution."""
    worst = 0.0
    for n, f in enumerate(seq.entries):
        expected = ctx.background(n) - ctx.psi_profile(float(n))
        worst = max(worst, weighted_norm(f - expected, ctx.m))
    return worst
