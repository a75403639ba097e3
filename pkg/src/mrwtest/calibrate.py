"""MRW parameter estimation from the log-volatility autocovariance.

Writing a return as ``eps * exp(omega)`` gives
``log|r| = omega + log|eps|``, so for lags h >= 1 the autocovariance of
``log|r|`` follows that of omega, ``lambda^2 log(T / ((1 + h) dt))``. A line
fitted against ``log(1 + h)`` has slope ``-lambda^2`` and intercept
``lambda^2 log(T / dt)``.
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError, EstimationError, NoMultifractalityWarning
from .synth import MrwParams, LogNormal
from .timeseries import as_array

log = logging.getLogger(__name__)

DEFAULT_FIT_RANGE = (1, 100)
MAX_INTEGRAL_SCALE = 1e5


@dataclass(frozen=True)
class LogVolAutocov:
    lags: np.ndarray
    values: np.ndarray
    n_effective: np.ndarray
    n_floored: int = 0


@dataclass(frozen=True)
class CalibrationResult:
    params: MrwParams
    fit_r2: float
    fit_range: tuple
    residuals: np.ndarray
    raw_integral_scale: float = None
    diagnostic: str = ""


def estimate_sigma(returns):
    """Sample standard deviation of one-day returns."""
    x = as_array(returns)
    if x.size < 2:
        raise DataError("need at least 2 returns to estimate sigma")
    if np.ptp(x) == 0:
        return 0.0
    return float(np.std(x, ddof=1))


def log_vol_autocov(returns, h_max=DEFAULT_FIT_RANGE[1]):
    """Sample autocovariance of ``log|r_t|`` at lags ``1 .. h_max``.

    Returns below ``eps * sigma_hat`` are floored there before taking logs
    and counted in ``n_floored``.
    """
    x = as_array(returns)
    if h_max < 1:
        raise DataError(f"h_max must be >= 1, got {h_max}")
    if 4 * h_max >= x.size:
        raise DataError(f"h_max={h_max} too large for {x.size} returns (need h_max < n/4)")
    a = np.abs(x)
    if not a.any():
        raise DataError("all returns are zero; log-volatility is undefined")
    floor = np.finfo(float).eps * estimate_sigma(x)
    low = a < floor
    n_floored = int(low.sum())
    if n_floored:
        log.info("floored %d near-zero returns before taking logs", n_floored)
        a = np.where(low, floor, a)
    lv = np.log(a)
    lags = np.arange(1, h_max + 1)
    if np.ptp(lv) == 0:
        values = np.zeros(h_max)
    else:
        values = kernels.lag_autocov(lv - lv.mean(), h_max)
    return LogVolAutocov(lags, values, x.size - lags, n_floored)


def fit_mrw_params(curve, fit_range=DEFAULT_FIT_RANGE, dt=1.0, sigma=1.0, variant=None):
    """Invert a linear fit of C(h) on log(1 + h) into intermittency and integral scale.

    A non-negative slope means no detectable multifractality: the result
    then carries intermittency 0, a diagnostic, and a
    :class:`NoMultifractalityWarning`. Integral scales are clamped to
    ``[2 dt, MAX_INTEGRAL_SCALE]``; the unclamped value is kept in
    ``raw_integral_scale``.
    """
    lo, hi = fit_range
    sel = (curve.lags >= lo) & (curve.lags <= hi)
    if sel.sum() < 5:
        raise DataError(f"fit range {fit_range} covers {int(sel.sum())} lags; need at least 5")
    x = np.log1p(curve.lags[sel].astype(float))
    y = np.asarray(curve.values, dtype=float)[sel]
    if not np.all(np.isfinite(y)):
        raise EstimationError("autocovariance curve contains non-finite values")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    variant = variant or LogNormal()

    diagnostic = ""
    if slope >= 0:
        diagnostic = f"non-negative slope {slope:.3g}: no decay in log-volatility autocovariance"
        warnings.warn(diagnostic, NoMultifractalityWarning, stacklevel=2)
        lam2 = 0.0
        raw_t = math.nan
        t = dt * (hi + 1)
    else:
        lam2 = -slope
        with np.errstate(over="ignore"):
            raw_t = float(dt * np.exp(intercept / lam2))
        t = min(max(raw_t, 2 * dt), MAX_INTEGRAL_SCALE)
        if t != raw_t:
            diagnostic = f"integral scale {raw_t:.4g} clamped to {t:.4g}"
            log.warning(diagnostic)
    if not sigma > 0:
        diagnostic = "; ".join(filter(None, [diagnostic, f"sigma estimate {sigma!r} replaced by 1"]))
        sigma = 1.0
    params = MrwParams(math.sqrt(lam2), t, sigma, dt, variant)
    return CalibrationResult(params, r2, (int(lo), int(hi)), resid, raw_t, diagnostic)


def calibrate(returns, fit_range=DEFAULT_FIT_RANGE, dt=1.0, variant=None):
    """Full calibration of (lambda, T, sigma) from one-day returns."""
    curve = log_vol_autocov(returns, fit_range[1])
    return fit_mrw_params(curve, fit_range, dt, estimate_sigma(returns), variant)
