"""
vche2d Experiments

Catalog of named experiments. Each builds its grids and data from
ExperimentSettings, runs the solvers, fits exponents and fills a
DecayReport with verdicts tied to named acceptance criteria.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.settings import DataConfig, ExperimentSettings
from ..core.eigenbasis import (
    basis,
    gamma_field,
    hermite_F,
    profile,
    project,
    unfiltered_profile_physical,
)
from ..core.evolution import (
    SimConfig,
    SimState,
    System,
    VorticitySolver,
    distance_observer,
    forcing_sign_check,
    lp_observer,
    mass_observer,
    moment_observer,
    norm_observer,
)
from ..core.lyapunov_perron import (
    LPContext,
    compute_semiorbit,
    equivalence_error,
    estimate_lipschitz,
    estimate_stepping_tolerance,
    forcing_S,
    lp_residual,
)
from ..core.norms import lp_norm, moments, weighted_norm
from ..core.operators import (
    filter_bound_constant,
    filter_energy_balance,
    heat_kernel,
    heat_kernel_lp_norm,
    helmholtz_filter,
    semigroup_L,
    semigroup_L_direct,
)
from ..core.picard import picard_mild_solve
from ..core.sampling import random_localized_field
from ..core.spectral import gradient, make_grid
from ..models.fields import Frame, Grid, ScalarField
from ..models.params import FilterParams, SemigroupTime
from ..models.report import DecayReport, SeriesTable
from ..utils.exceptions import ExperimentError, FitError
from ..utils.logger import get_logger
from .fitting import fit_exponent
from .reporting import write_report
from .snapshot import write_snapshot

logger = get_logger(__name__)

# sup_tau ||w(tau)||_m may exceed ||w0||_m by at most this factor
BOUNDEDNESS_FACTOR = 2.0


@dataclass
class ExperimentOutcome:
    """Report plus the state written as the final snapshot."""
    report: DecayReport
    final_state: Optional[SimState] = None


Runner = Callable[[ExperimentSettings, DecayReport], Optional[SimState]]


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    description: str
    runner: Runner


EXPERIMENTS: Dict[str, ExperimentSpec] = {}


def experiment(name: str, description: str) -> Callable[[Runner], Runner]:
    """Register a runner under ``name``."""
    def register(runner: Runner) -> Runner:
        EXPERIMENTS[name] = ExperimentSpec(name, description, runner)
        return runner
    return register


def list_experiments() -> List[ExperimentSpec]:
    return [EXPERIMENTS[name] for name in sorted(EXPERIMENTS)]


# -- initial data ---------------------------------------------------------

def _gaussian_bump(grid: Grid, c1: float, c2: float, s1: float, s2: float) -> np.ndarray:
    x1, x2 = grid.mesh
    return np.exp(-(x1 - c1) ** 2 / (2.0 * s1 ** 2) - (x2 - c2) ** 2 / (2.0 * s2 ** 2))


def scaled_initial_data(grid: Grid, data: DataConfig, m: int, norm: float) -> ScalarField:
    """Off-centre anisotropic Gaussian with ||w0||_m = norm; mass and first moments nonzero."""
    values = _gaussian_bump(grid, data.offset1, data.offset2, data.width1, data.width2)
    field = ScalarField(grid, values, Frame.SCALED)
    return field * (norm / weighted_norm(field, m))


def physical_initial_data(grid: Grid, data: DataConfig) -> ScalarField:
    """Peaked physical data of the configured mass, twice the scaled size."""
    values = _gaussian_bump(grid, 2.0 * data.offset1, 2.0 * data.offset2,
                            2.0 * data.width1, 2.0 * data.width2)
    field = ScalarField(grid, values, Frame.PHYSICAL)
    return field * (data.mass / (grid.cell_area * float(np.sum(values))))


# -- helpers ----------------------------------------------------------------

def _fit_verdict(report: DecayReport, name: str, criterion: str,
                 series: Sequence[Tuple[float, float]], window: Tuple[float, float],
                 log_log: bool, value_fn: Callable[[float], float], threshold: float,
                 comparison: str = "<=") -> Optional[float]:
    """Fit, record the exponent and a verdict on value_fn(slope)."""
    try:
        exponent = fit_exponent(name, series, window, log_log)
    except FitError as e:
        report.add_warning("fit", f"{name}: {e.message}")
        report.add_verdict(name, criterion, math.nan, threshold, comparison)
        return None
    report.add_exponent(exponent)
    report.add_verdict(name, criterion, value_fn(exponent.slope), threshold, comparison)
    return exponent.slope


def _store_table(report: DecayReport, name: str, table) -> None:
    if table is None:
        return
    target = report.table(name, table.columns)
    for row in table.rows:
        target.add_row(dict(zip(table.columns, row)))


def _boundedness_verdict(report: DecayReport, table: SeriesTable, m: int) -> float:
    """Global bound: sup over the run of ||w(tau)||_m against ||w0||_m."""
    norms = table.column(f"norm_m{m}")
    sup = max(norms)
    report.note(f"sup_norm_m{m}", sup)
    report.add_verdict("global_bound",
                       f"sup_tau ||w(tau)||_{m} <= {BOUNDEDNESS_FACTOR:g} ||w0||_{m}",
                       sup / norms[0], BOUNDEDNESS_FACTOR)
    return sup


def _scaled_config(settings: ExperimentSettings, **overrides) -> SimConfig:
    base = dict(n_points=settings.grid.n_points, half_width=settings.grid.half_width,
                alpha=settings.physics.alpha, frame=Frame.SCALED, system=System.FULL,
                dt=settings.stepping.dt, t_end=settings.stepping.t_end,
                dealias=settings.physics.dealias, output_every=settings.stepping.output_every,
                far_field=settings.physics.far_field)
    base.update(overrides)
    return SimConfig(**base)


# -- experiments ------------------------------------------------------------

@experiment("smoothing-L1Lp", "Physical-frame L1 -> Lp smoothing rates of small data")
def run_smoothing(settings: ExperimentSettings, report: DecayReport) -> SimState:
    phys = settings.physical
    alpha = settings.physics.alpha
    config = SimConfig(n_points=phys.n_points, half_width=phys.half_width, alpha=alpha,
                       frame=Frame.PHYSICAL, system=System.FULL, dt=phys.dt,
                       t_end=phys.t_end, dealias=settings.physics.dealias,
                       output_every=phys.output_every, far_field=settings.physics.far_field)
    grid = config.grid
    v0 = physical_initial_data(grid, settings.data)
    mass0 = moments(v0).a

    def profile_distance(state: SimState) -> Dict[str, float]:
        diff = state.w - unfiltered_profile_physical(grid, state.time, mass0, alpha)
        return {"profile_l1": lp_norm(diff, 1), "profile_l2": lp_norm(diff, 2),
                "profile_linf": lp_norm(diff, math.inf)}

    solver = VorticitySolver(config, report)
    state = solver.initial_state(v0)
    result = solver.run_to(state, config.t_end,
                           [lp_observer((1.0, 2.0, math.inf)), mass_observer, profile_distance])
    _store_table(report, "norms", result.table)
    table = report.series["norms"]

    window = (settings.fit.physical_start, settings.fit.physical_end)
    _fit_verdict(report, "linf_exponent", "smoothing rate |v|_inf ~ t^-1",
                 table.pairs("linf"), window, True, lambda s: abs(s + 1.0), 0.1)
    _fit_verdict(report, "l2_exponent", "smoothing rate |v|_2 ~ t^-1/2",
                 table.pairs("l2"), window, True, lambda s: abs(s + 0.5), 0.05)
    for column in ("profile_l1", "profile_l2", "profile_linf"):
        try:
            report.add_exponent(fit_exponent(column, table.pairs(column), window, True))
        except FitError as e:
            report.add_warning("fit", f"{column}: {e.message}")

    masses = table.column("mass")
    drift = max(abs(m - mass0) for m in masses) / abs(mass0)
    report.add_verdict("mass_drift", "mass conservation", drift, 1e-8)
    report.note("initial_mass", mass0)
    return result.state


@experiment("first-order-decay", "Scaled-frame decay of w - a Gamma in L2(2)")
def run_first_order(settings: ExperimentSettings, report: DecayReport) -> SimState:
    config = _scaled_config(settings)
    grid = config.grid
    alpha = config.alpha
    w0 = scaled_initial_data(grid, settings.data, 2, settings.data.initial_norm)
    mom0 = moments(w0)
    a = mom0.a

    solver = VorticitySolver(config, report)
    state = solver.initial_state(w0)
    result = solver.run_to(state, config.t_end, [
        moment_observer,
        norm_observer(2),
        distance_observer(lambda tau: gamma_field(grid, tau, alpha) * a, 2, "dist_gamma_m2"),
    ])
    _store_table(report, "decay", result.table)
    table = report.series["decay"]

    window = (settings.fit.scaled_start, settings.fit.scaled_end)
    _fit_verdict(report, "first_order_exponent", "||w - a Gamma||_2 ~ e^{-mu tau}, mu > 0.4",
                 table.pairs("dist_gamma_m2"), window, False, lambda s: s, -0.4)
    _boundedness_verdict(report, table, 2)

    times = table.column("time")
    mass_drift = max(abs(m - a) for m in table.column("mass")) / abs(a)
    report.add_verdict("mass_drift", "mass conservation", mass_drift, 1e-8)
    for key, b0 in (("b1", mom0.b1), ("b2", mom0.b2)):
        if abs(b0) < 1e-300:
            continue
        err = max(abs(b - b0 * math.exp(-0.5 * t)) for t, b in zip(times, table.column(key)))
        report.add_verdict(f"{key}_decay", "first moments decay as e^{-tau/2}", err / abs(b0), 1e-6)
    report.note("mass", a)
    report.note("b1", mom0.b1)
    report.note("b2", mom0.b2)
    report.note("stability_bound", solver.stability_bound)
    return result.state


@experiment("second-order-decay",
            "Scaled-frame decay of w - a Gamma - e^{-tau/2}(b1 Lambda1 + b2 Lambda2) in L2(3)")
def run_second_order(settings: ExperimentSettings, report: DecayReport) -> SimState:
    config = _scaled_config(settings)
    grid = config.grid
    alpha = config.alpha
    w0 = scaled_initial_data(grid, settings.data, 3, settings.data.initial_norm)
    coeffs, _ = project(w0, 3)

    solver = VorticitySolver(config, report)
    state = solver.initial_state(w0)
    result = solver.run_to(state, config.t_end, [
        moment_observer,
        norm_observer(3),
        distance_observer(lambda tau: profile(grid, coeffs, tau, alpha), 3, "dist_profile_m3"),
        distance_observer(lambda tau: gamma_field(grid, tau, alpha) * coeffs.a, 3,
                          "dist_gamma_m3"),
    ])
    _store_table(report, "decay", result.table)
    table = report.series["decay"]

    window = (settings.fit.scaled_start, settings.fit.scaled_end)
    _fit_verdict(report, "second_order_exponent",
                 "||w - a Gamma - e^{-tau/2} Lambda_b||_3 ~ e^{-mu tau}, mu > 0.75",
                 table.pairs("dist_profile_m3"), window, False, lambda s: s, -0.75)
    _boundedness_verdict(report, table, 3)
    try:
        report.add_exponent(fit_exponent("first_order_m3", table.pairs("dist_gamma_m3"),
                                         window, False))
    except FitError as e:
        report.add_warning("fit", f"first_order_m3: {e.message}")

    residuals = forcing_sign_check(grid, coeffs, 1.0, alpha)
    for name, value in residuals.items():
        report.note(f"forcing_residual_{name}", value)
    report.note("a", coeffs.a)
    report.note("b1", coeffs.b1)
    report.note("b2", coeffs.b2)
    return result.state


@experiment("invariants", "Eigenstructure, filter identities, heat kernels and oracle checks")
def run_invariants(settings: ExperimentSettings, report: DecayReport) -> SimState:
    inv = settings.invariants
    alpha = settings.physics.alpha
    grid = make_grid(inv.n_points, inv.half_width)
    b = basis(grid)
    rng = np.random.default_rng(settings.seed)

    # eigenstructure of L
    one = SemigroupTime(1.0)
    g_norm = weighted_norm(b.G, 2)
    report.add_verdict("eigen_G", "e^L G = G",
                       weighted_norm(semigroup_L(b.G, one) - b.G, 2), 1e-6)
    for i in (1, 2):
        f = hermite_F(grid, i)
        err = weighted_norm(semigroup_L(f, one) - f * math.exp(-0.5), 2)
        report.add_verdict(f"eigen_F{i}", "e^L F_i = e^{-1/2} F_i", err, 1e-6)

    gamma0 = gamma_field(grid, 0.0, alpha)
    stationarity = b.vG.dot(gradient(gamma0)).max_abs()
    report.add_verdict("stationarity", "v^G . grad Gamma = 0", stationarity, 1e-8)

    # Gamma evolves exactly under the full system
    a = settings.data.mass
    config = SimConfig(n_points=inv.n_points, half_width=inv.half_width, alpha=alpha,
                       frame=Frame.SCALED, system=System.FULL,
                       dt=min(settings.stepping.dt, 0.0025), t_end=inv.gamma_tau_end,
                       dealias=settings.physics.dealias, output_every=settings.stepping.output_every,
                       far_field=settings.physics.far_field)
    solver = VorticitySolver(config, report)
    scale = abs(a) * weighted_norm(gamma0, 2)
    result = solver.run_to(solver.initial_state(gamma0 * a), config.t_end, [
        distance_observer(lambda tau: gamma_field(grid, tau, alpha) * a, 2, "gamma_residual"),
    ])
    _store_table(report, "gamma_evolution", result.table)
    residual = max(report.series["gamma_evolution"].column("gamma_residual")) / scale
    report.add_verdict("gamma_evolution", "Gamma(tau) solves the scaled system", residual, 1e-7)

    # filter identities
    fp = FilterParams.scaled(alpha, 0.0)
    filtered = helmholtz_filter(gamma0, fp)
    report.add_verdict("filter_gamma", "H(Gamma) = G",
                       (filtered - b.G).max_abs() / b.G.max_abs(), 1e-10)
    strong = FilterParams.scaled(0.2, 0.0)
    bound = filter_bound_constant(2, 0.2)
    energy0 = 0.0
    energy2 = 0.0
    worst_ratio = 0.0
    for _ in range(inv.random_fields):
        w = random_localized_field(grid, rng)
        energy0 = max(energy0, filter_energy_balance(w, fp, 0.0)["residual"])
        balance = filter_energy_balance(w, strong, 2.0)
        energy2 = max(energy2, balance["residual"])
        worst_ratio = max(worst_ratio, balance["ratio"])
    report.add_verdict("energy_identity_m0", "filter energy identity, m = 0", energy0, 1e-10)
    report.add_verdict("energy_identity_m2", "weighted filter energy identity, m = 2",
                       energy2, 1e-10)
    report.add_verdict("filter_bound_m2", "||H w||_2^2 <= C ||w||_2^2 at alpha = 0.2",
                       worst_ratio, bound)
    report.note("filter_bound_ratio_max", worst_ratio)
    report.note("filter_bound_constant", bound)

    # heat kernel norms
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        kernel = heat_kernel(grid, t)
        for p in (1.0, 2.0, 4.0):
            exact = heat_kernel_lp_norm(p, t)
            worst = max(worst, abs(lp_norm(kernel, p) - exact) / exact)
    report.add_verdict("heat_kernel_norms", "closed-form |Phi(t)|_p", worst, 1e-6)

    # oracles on a coarse grid
    small = make_grid(inv.picard_n_points, inv.picard_half_width)
    f = random_localized_field(small, rng)
    worst = 0.0
    for tau in (0.5, 1.0):
        st = SemigroupTime(tau)
        spectral_value = semigroup_L(f, st)
        direct = semigroup_L_direct(f, st)
        worst = max(worst, (spectral_value - direct).max_abs() / direct.max_abs())
    report.add_verdict("semigroup_vs_kernel", "e^{tau L} composition vs kernel quadrature",
                       worst, 1e-6)

    v0 = random_localized_field(small, rng, frame=Frame.PHYSICAL)
    v0 = v0 * (settings.data.mass / max(lp_norm(v0, 1), 1e-300))
    picard = picard_mild_solve(v0, 0.1, alpha=alpha)
    pconfig = SimConfig(n_points=small.n_points, half_width=small.half_width, alpha=alpha,
                        frame=Frame.PHYSICAL, dt=0.001, t_end=0.1,
                        dealias=settings.physics.dealias, output_every=1000,
                        far_field=settings.physics.far_field, check_tail=False)
    psolver = VorticitySolver(pconfig, report)
    stepped = psolver.run_to(psolver.initial_state(v0), 0.1).state.w
    report.add_verdict("picard_vs_stepper", "mild solution vs stepper at t = 0.1",
                       lp_norm(picard - stepped, 2), 1e-6)
    return result.state


@experiment("lp-verification", "Lyapunov-Perron semiorbits, residuals and contraction estimates")
def run_lp_verification(settings: ExperimentSettings, report: DecayReport) -> Optional[SimState]:
    lp = settings.lyapunov
    alpha = settings.physics.alpha
    grid = make_grid(lp.n_points, lp.half_width)

    # first order, L2(2)
    w0 = scaled_initial_data(grid, settings.data, 2, 0.8 * lp.r0)
    ctx = LPContext(w0, 2, lp.mu, alpha, lp.r0, lp.dt,
                    dealias_products=settings.physics.dealias, sink=report)
    seq = compute_semiorbit(ctx, lp.steps)
    table = report.table("semiorbit_m2", ["n", "norm_m2", "mass"])
    for n, f in enumerate(seq.entries):
        table.add_row({"n": float(n), "norm_m2": weighted_norm(f, 2), "mass": moments(f).a})

    result = lp_residual(seq, ctx)
    tolerance = estimate_stepping_tolerance(ctx)
    report.add_verdict("lp_residual_m2", "Lyapunov-Perron residual within stepping + tail",
                       result.residual, 5.0 * (tolerance + result.tail_bound) + 1e-14)
    norms = seq.norms()
    ratios = [norms[n + 1] / norms[n] for n in range(2, len(norms) - 1)]
    report.add_verdict("semiorbit_ratio_m2", "||f_{n+1}|| / ||f_n|| <= e^{-0.4} for n >= 2",
                       max(ratios) if ratios else math.nan, math.exp(-0.4))
    report.add_verdict("semiorbit_mass", "P1 f_n mass vanishes",
                       max(abs(m) for m in table.column("mass")), 1e-9)
    report.add_verdict("semiorbit_equivalence", "f_n = w(n) - a Gamma(n)",
                       equivalence_error(ctx, seq), lp.equivalence_tolerance)

    lip = estimate_lipschitz(ctx, lp.lipschitz_samples, settings.seed,
                             constant_samples=lp.constant_samples)
    lip_table = report.table("lipschitz", ["pair", "n", "ratio"])
    for row in lip.samples:
        lip_table.add_row(row)
    report.add_verdict("contraction", "C1/(1-e^-mu) + C2/(e^-mu - e^-1/2) < 1/Lip(R)",
                       1.0 if lip.contraction_ok else 0.0, 1.0, ">=")
    report.note("lip_r", lip.lip_r)
    report.note("c1", lip.c1)
    report.note("c2", lip.c2)
    report.note("contraction_margin", lip.margin)
    report.note("stepping_tolerance_m2", tolerance)
    report.note("tail_bound_m2", result.tail_bound)

    # second order, L2(3)
    w3 = scaled_initial_data(grid, settings.data, 3, 0.8 * lp.r0)
    ctx3 = LPContext(w3, 3, lp.mu_second, alpha, lp.r0, lp.dt,
                     dealias_products=settings.physics.dealias, sink=report)
    seq3 = compute_semiorbit(ctx3, lp.steps)
    result3 = lp_residual(seq3, ctx3)
    tolerance3 = estimate_stepping_tolerance(ctx3)
    report.add_verdict("lp_residual_m3", "second-order Lyapunov-Perron residual",
                       result3.residual, 5.0 * (tolerance3 + result3.tail_bound) + 1e-14)
    forcing_norms = [weighted_norm(forcing_S(n, ctx3), 3) for n in range(lp.steps)]
    forcing_table = report.table("forcing_m3", ["n", "norm_m3"])
    for n, value in enumerate(forcing_norms):
        forcing_table.add_row({"n": float(n), "norm_m3": value})
    forcing_ratios = [forcing_norms[n + 1] / forcing_norms[n]
                      for n in range(len(forcing_norms) - 1) if forcing_norms[n] > 0]
    report.add_verdict("forcing_ratio_m3", "||S_{n+1}||_3 / ||S_n||_3 <= 1.05 e^{-1}",
                       max(forcing_ratios) if forcing_ratios else math.nan,
                       1.05 * math.exp(-1.0))
    report.note("stepping_tolerance_m3", tolerance3)
    return None


# -- runners ----------------------------------------------------------------

def _check_name(name: str) -> None:
    if name not in EXPERIMENTS:
        valid = sorted(EXPERIMENTS)
        raise ExperimentError(f"Unknown experiment '{name}'; valid names: {', '.join(valid)}",
                              {"valid": valid})


def run_experiment(name: str, settings: ExperimentSettings) -> ExperimentOutcome:
    """Run one named experiment.

    Raises:
        ExperimentError: Unknown experiment name
    """
    _check_name(name)
    report = DecayReport(name, config=settings.flat())
    logger.info("Experiment started", experiment=name)
    final_state = EXPERIMENTS[name].runner(settings, report)
    logger.info("Experiment finished", experiment=name, passed=report.passed,
                failed=[v.name for v in report.failed_verdicts])
    return ExperimentOutcome(report, final_state)


def write_outcome(outcome: ExperimentOutcome, out_dir: Union[str, Path]) -> Path:
    """Write the report files and, when present, final_state.vche."""
    write_report(outcome.report, out_dir)
    target = Path(out_dir) / outcome.report.experiment
    state = outcome.final_state
    if state is not None:
        write_snapshot(target / "final_state.vche", state.w, state.alpha, state.time)
    return target


def worker_count(settings: ExperimentSettings, jobs: int) -> int:
    """Thread count: the configured cap, else one per job up to the CPU count."""
    cap = settings.threads or (os.cpu_count() or 1)
    return max(1, min(cap, jobs))


def _failed_outcome(name: str, settings: ExperimentSettings, error: Exception) -> ExperimentOutcome:
    report = DecayReport(name, config=settings.flat())
    report.add_warning("error", f"{type(error).__name__}: {error}")
    report.add_verdict("completed", "experiment ran to completion", 0.0, 1.0, ">=")
    logger.error("Experiment failed", experiment=name, error=str(error),
                 error_type=type(error).__name__)
    return ExperimentOutcome(report)


def run_experiments(names: Sequence[str], settings: ExperimentSettings,
                    out_dir: Optional[Union[str, Path]] = None) -> List[ExperimentOutcome]:
    """Run several experiments concurrently; results come back in input order."""
    for name in names:
        _check_name(name)
    outcomes: Dict[int, ExperimentOutcome] = {}
    workers = worker_count(settings, len(names))
    logger.info("Running experiments", names=list(names), workers=workers)
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="experiment") as executor:
        futures = {executor.submit(run_experiment, name, settings): index
                   for index, name in enumerate(names)}
        for future in as_completed(futures):
            index = futures[future]
            try:
                outcome = future.result()
            except Exception as e:
                outcome = _failed_outcome(names[index], settings, e)
            if out_dir is not None:
                write_outcome(outcome, out_dir)
            outcomes[index] = outcome
    return [outcomes[i] for i in range(len(names))]
