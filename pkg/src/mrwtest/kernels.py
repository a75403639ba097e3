"""Hot numeric kernels.

Each kernel has a pure-numpy implementation and, when numba is importable, an
``@njit`` twin. The active implementation is chosen once at import time from
the ``MRWTEST_NUMBA`` environment variable (``0``/``false``/``off`` selects
numpy). The lag autocovariance always runs on numpy, which is faster. Both variants stay importable so they can be benchmarked and
cross-checked against each other.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None


def _env_wants_numba():
    flag = os.environ.get("MRWTEST_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _env_wants_numba()


def abs_moments_numpy(cum, taus, qs, back_weights):
    """Weighted mean of ``|cum[t + tau] - cum[t]| ** q`` for every (tau, q).

    Parameters
    ----------
    cum : ndarray, shape (N + 1,)
        Cumulative sum of base-scale returns with a leading zero.
    taus : ndarray of int
        Aggregation scales, each in ``[1, N]``.
    qs : ndarray of float
        Moment orders.
    back_weights : ndarray, shape (N,)
        ``back_weights[k]`` weighs the increment ``k`` steps before the last
        admissible one. Normalisation is done here, per scale.

    Returns
    -------
    ndarray, shape (len(taus), len(qs))
    """
    out = np.empty((len(taus), len(qs)))
    for i, tau in enumerate(taus):
        incr = np.abs(cum[tau:] - cum[:-tau])
        w = back_weights[: incr.size][::-1]
        wsum = w.sum()
        for j, q in enumerate(qs):
            if q == 1.0:
                p = incr
            elif q == 2.0:
                p = incr * incr
            else:
                p = incr ** q
            out[i, j] = np.dot(w, p) / wsum
    return out


def lag_autocov_numpy(x, max_lag):
    """Autocovariance of an already-centred sequence at lags 1..max_lag.

    Normalised by the full length ``n`` (biased estimator), which keeps the
    sequence of estimates positive semi-definite.
    """
    n = x.size
    out = np.empty(max_lag)
    for h in range(1, max_lag + 1):
        out[h - 1] = np.dot(x[:-h], x[h:]) / n
    return out


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def abs_moments_numba(cum, taus, qs, back_weights):
        nt = taus.shape[0]
        nq = qs.shape[0]
        out = np.empty((nt, nq))
        n_cum = cum.shape[0]
        for i in range(nt):
            tau = taus[i]
            m = n_cum - tau
            acc = np.zeros(nq)
            wsum = 0.0
            for t in range(m):
                w = back_weights[m - 1 - t]
                v = abs(cum[t + tau] - cum[t])
                wsum += w
                for j in range(nq):
                    q = qs[j]
                    if q == 1.0:
                        acc[j] += w * v
                    elif q == 2.0:
                        acc[j] += w * v * v
                    else:
                        acc[j] += w * v ** q
            for j in range(nq):
                out[i, j] = acc[j] / wsum
        return out

    @numba.njit(cache=True)
    def lag_autocov_numba(x, max_lag):
        n = x.shape[0]
        out = np.empty(max_lag)
        for h in range(1, max_lag + 1):
            s = 0.0
            for t in range(n - h):
                s += x[t] * x[t + h]
            out[h - 1] = s / n
        return out

else:  # pragma: no cover
    abs_moments_numba = None
    lag_autocov_numba = None


abs_moments = abs_moments_numba if USE_NUMBA else abs_moments_numpy
# BLAS dot products beat the serial numba reduction, so numpy serves both backends
lag_autocov = lag_autocov_numpy


def backend():
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"
