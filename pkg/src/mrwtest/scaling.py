"""Generalised Hurst exponents from the scaling of empirical moments.

The q-th absolute moment of log-returns aggregated over ``tau`` days is fitted
against ``tau`` in log-log coordinates; the slope is ``q * H(q)``. Estimates
are averaged over a range of maximal scales ``tau_max`` and their spread is
reported as the fit error. The weighted variant damps older observations
exponentially with characteristic time ``theta_days``.
"""
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import EstimationError, MomentBoundWarning, ScaleError
from .timeseries import as_array

DEFAULT_THETA = 415.0
DEFAULT_TAU_MAX = range(10, 31)
DEFAULT_Q_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class StructureFunctionCurve:
    q: float
    taus: np.ndarray
    moments: np.ndarray


@dataclass(frozen=True)
class GheEstimate:
    q: float
    h: float
    h_std: float
    weighted: bool = False
    theta_days: float = None


@dataclass(frozen=True)
class ScalingFunction:
    qs: np.ndarray
    zetas: np.ndarray
    errors: np.ndarray


class DeltaH(NamedTuple):
    value: float
    error: float


def _back_weights(n, theta_days):
    if theta_days is None or math.isinf(theta_days):
        return np.ones(n)
    if not theta_days > 0:
        raise ValueError(f"theta_days must be > 0, got {theta_days}")
    return np.exp(-np.arange(n) / theta_days)


def _moments(values, taus, qs, theta_days=None):
    values = as_array(values)
    taus = np.asarray(taus, dtype=np.int64)
    qs = np.asarray(qs, dtype=float)
    if np.any(qs <= 0):
        raise ValueError("moment orders must be positive")
    if taus.min() < 1:
        raise ScaleError("scales must be >= 1")
    if taus.max() >= values.size:
        raise ScaleError(f"scale {taus.max()} does not fit in a series of {values.size} returns")
    cum = np.concatenate(([0.0], np.cumsum(values)))
    return kernels.abs_moments(cum, taus, qs, _back_weights(values.size, theta_days))


def structure_function(returns, q, tau):
    """Mean of ``|r_{t,tau}|^q`` over the ``N - tau + 1`` overlapping aggregates."""
    return float(_moments(returns, [tau], [q])[0, 0])


def weighted_structure_function(returns, q, tau, theta_days=DEFAULT_THETA):
    """Exponentially weighted version of :func:`structure_function`.

    The most recent aggregate has the largest weight; weights fall by a factor
    ``e`` every ``theta_days`` further back and are normalised to one.
    """
    return float(_moments(returns, [tau], [q], theta_days)[0, 0])


def structure_curve(returns, q, tau_max=30, theta_days=None):
    taus = np.arange(1, tau_max + 1)
    return StructureFunctionCurve(q, taus, _moments(returns, taus, [q], theta_days)[:, 0])


def _slopes(log_taus, log_moments, tau_maxes):
    """OLS slopes of log_moments[:k] on log_taus[:k] for each k in tau_maxes."""
    x = log_taus[:, None]
    y = log_moments
    k = np.arange(1, x.shape[0] + 1)[:, None]
    sx, sxx = np.cumsum(x, axis=0), np.cumsum(x * x, axis=0)
    sy, sxy = np.cumsum(y, axis=0), np.cumsum(x * y, axis=0)
    i = np.asarray(tau_maxes) - 1
    return (k[i] * sxy[i] - sx[i] * sy[i]) / (k[i] * sxx[i] - sx[i] ** 2)


def ghe_many(returns, qs, tau_max_range=DEFAULT_TAU_MAX, weighted=False, theta_days=DEFAULT_THETA):
    """GHE estimates for several moment orders sharing one pass over the data."""
    tau_maxes = list(tau_max_range)
    if not tau_maxes or min(tau_maxes) < 2:
        raise ValueError("tau_max values must be >= 2")
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    taus = np.arange(1, max(tau_maxes) + 1)
    theta = theta_days if weighted else None
    m = _moments(returns, taus, qs, theta)
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        bad = np.argwhere(~(m > 0) | ~np.isfinite(m))[0]
        raise EstimationError(
            f"degenerate moment at tau={taus[bad[0]]}, q={qs[bad[1]]}: {m[tuple(bad)]!r}"
        )
    slopes = _slopes(np.log(taus), np.log(m), tau_maxes) / qs
    std = slopes.std(axis=0, ddof=1) if len(tau_maxes) > 1 else np.zeros(qs.size)
    return [
        GheEstimate(float(q), float(h), float(s), weighted, theta if weighted else None)
        for q, h, s in zip(qs, slopes.mean(axis=0), std)
    ]


def ghe(returns, q, tau_max_range=DEFAULT_TAU_MAX, weighted=False, theta_days=DEFAULT_THETA):
    """Generalised Hurst exponent H(q), averaged over ``tau_max_range``."""
    return ghe_many(returns, [q], tau_max_range, weighted, theta_days)[0]


def delta_h(returns, q=1.0, q_prime=2.0, weighted=True, theta_days=DEFAULT_THETA,
            tau_max_range=DEFAULT_TAU_MAX):
    """``H(q) - H(q')`` with the root-sum-square of the two fit errors."""
    if q == q_prime:
        raise ValueError("q and q_prime must differ")
    a, b = ghe_many(returns, [q, q_prime], tau_max_range, weighted, theta_days)
    return DeltaH(a.h - b.h, math.hypot(a.h_std, b.h_std))


def empirical_zeta(returns, q_grid=DEFAULT_Q_GRID, tau_max_range=DEFAULT_TAU_MAX,
                   intermittency=None):
    """Empirical scaling function ``zeta(q) = q H(q)``; ``zeta(0) = 0``."""
    qs = np.asarray(q_grid, dtype=float)
    if np.any(qs < 0):
        raise ValueError("negative moment orders are not supported")
    if intermittency:
        _check_bound(qs.max(), intermittency)
    zetas = np.zeros(qs.size)
    errors = np.zeros(qs.size)
    pos = qs > 0
    if pos.any():
        est = ghe_many(returns, qs[pos], tau_max_range)
        zetas[pos] = [e.q * e.h for e in est]
        errors[pos] = [e.q * e.h_std for e in est]
    return ScalingFunction(qs, zetas, errors)


def _check_bound(q, intermittency):
    if intermittency > 0 and q > math.sqrt(2) / intermittency:
        warnings.warn(
            f"q={q} exceeds the moment bound sqrt(2)/lambda={math.sqrt(2) / intermittency:.3g}",
            MomentBoundWarning,
            stacklevel=3,
        )


def theoretical_zeta(q, intermittency):
    """Log-normal MRW scaling function, a parabola in ``q``."""
    return (q - q * (q - 2) * intermittency ** 2) / 2


def theoretical_h(q, intermittency):
    if q == 0:
        raise ValueError("H(q) is undefined at q = 0")
    _check_bound(q, intermittency)
    return theoretical_zeta(q, intermittency) / q
