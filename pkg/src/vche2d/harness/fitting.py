"""
vche2d Decay Fitting

Least-squares decay exponents of sampled series: log-linear in time for the
scaled frame, log-log in (1 + t) for the physical frame.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..models.report import FittedExponent
from ..utils.exceptions import FitError
from ..utils.logger import get_logger

MIN_SAMPLES = 10

FIT_MODES = ("log-linear", "log-log")

logger = get_logger(__name__)


def _window_samples(series: Sequence[Tuple[float, float]],
                    window: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = window
    if not lo < hi:
        raise FitError("fit window must have positive length", {"window": window})
    eps = 1e-12 * max(1.0, abs(hi))
    selected = [(t, v) for t, v in series if lo - eps <= t <= hi + eps]
    if len(selected) < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples in the fit window",
                       {"window": window, "samples": len(selected)})
    times = np.array([t for t, _ in selected], dtype=np.float64)
    values = np.array([v for _, v in selected], dtype=np.float64)
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise FitError("fit values must be positive and finite",
                       {"window": window, "min": float(np.min(values))})
    return times, values


def fit_decay_exponent(series: Sequence[Tuple[float, float]], window: Tuple[float, float],
                       log_log: bool = False) -> Tuple[float, float]:
    """Slope and max residual of a straight-line fit to log(value).

    Args:
        series: (time, value) samples
        window: Closed time interval the fit is restricted to
        log_log: Fit against log(1 + t) instead of t

    Returns:
        (slope, max absolute deviation of log(value) from the fitted line)

    Raises:
        FitError: Fewer than ten samples in the window or nonpositive values
    """
    times, values = _window_samples(series, window)
    x = np.log1p(times) if log_log else times
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), residual


def fit_exponent(name: str, series: Sequence[Tuple[float, float]],
                 window: Tuple[float, float], log_log: bool = False) -> FittedExponent:
    """fit_decay_exponent wrapped as a report entry."""
    times, _ = _window_samples(series, window)
    slope, residual = fit_decay_exponent(series, window, log_log)
    mode = FIT_MODES[1] if log_log else FIT_MODES[0]
    logger.info("Fitted decay exponent", name=name, slope=slope, residual=residual,
                window=list(window), mode=mode)
    return FittedExponent(name, slope, residual, tuple(window), mode, len(times))


def local_slopes(series: Sequence[Tuple[float, float]], log_log: bool = False,
                 stride: Optional[int] = None) -> np.ndarray:
    """Finite-difference slopes of log(value), one per consecutive pair of samples."""
    pairs = list(series)[::stride or 1]
    if len(pairs) < 2:
        return np.zeros(0)
    t = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    x = np.log1p(t) if log_log else t
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.diff(np.log(v)) / np.diff(x)


def expected_lp_exponent(p: float) -> float:
    """Heat-like rate -(1 - 1/p) of the L^p norm for unit-mass data."""
    if math.isinf(p):
        return -1.0
    return -(1.0 - 1.0 / p)
