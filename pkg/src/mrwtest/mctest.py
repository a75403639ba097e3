"""Monte Carlo test of constant multifractality.

A null distribution of the weighted ``Delta H(1, 2)`` is built from MRW
ensembles with parameters calibrated on the data. The same statistic is then
traced on rolling windows of the data and the share of windows outside the
[2.5%, 97.5%] band is reported.
"""
import contextlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .calibrate import DEFAULT_FIT_RANGE, CalibrationResult, calibrate
from .errors import DataError, InvalidParamsError, MrwError
from .scaling import DEFAULT_TAU_MAX, DEFAULT_THETA, delta_h
from .synth import LogNormal, MrwParams, simulate_mrw
from .timeseries import PriceSeries, ReturnSeries, as_array, log_returns, rolling_windows

log = logging.getLogger(__name__)

QUANTILE_LEVELS = (0.025, 0.5, 0.975)


@dataclass(frozen=True)
class TestConfig:
    window: int = 1250
    shift: int = 100
    n_sims: int = 1000
    sim_length: int = 1250
    theta_days: float = DEFAULT_THETA
    tau_max_range: tuple = (DEFAULT_TAU_MAX.start, DEFAULT_TAU_MAX.stop - 1)
    fit_range: tuple = DEFAULT_FIT_RANGE
    q: float = 1.0
    q_prime: float = 2.0
    seed: int = 0
    workers: int = 1

    __test__ = False  # not a pytest class

    @property
    def tau_maxes(self):
        lo, hi = self.tau_max_range
        return range(lo, hi + 1)


@dataclass(frozen=True)
class QuantileBand:
    q025: float
    q50: float
    q975: float
    n_sims: int
    sim_length: int
    params: MrwParams
    samples: np.ndarray = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class DynamicalTrace:
    window_end_indices: np.ndarray
    delta_h_values: np.ndarray
    delta_h_errors: np.ndarray

    def __len__(self):
        return self.delta_h_values.size


@dataclass(frozen=True)
class ExceedanceReport:
    params: MrwParams
    band: QuantileBand
    trace: DynamicalTrace
    exceedance_pct: float
    calibration: CalibrationResult = None


def _sim_statistic(params, sim_length, seed, config):
    path = simulate_mrw(params, sim_length, seed)
    return delta_h(path.increments, config.q, config.q_prime, True, config.theta_days,
                   config.tau_maxes).value


def _chunk(args):
    params, sim_length, master, indices, config = args
    out = []
    for i in indices:
        try:
            out.append(_sim_statistic(params, sim_length, (master, i), config))
        except MrwError as exc:
            raise type(exc)(f"simulation {i} (seed=({master}, {i})) failed: {exc}") from exc
    return out


def null_samples(params, n_sims, sim_length, seed, config):
    """Delta H statistic on ``n_sims`` independent paths, in simulation order.

    Simulation ``i`` uses the seed ``(seed, i)`` so results do not depend on
    how work is split across processes.
    """
    if config.workers and config.workers > 1:
        chunks = np.array_split(np.arange(n_sims), config.workers * 4)
        jobs = [(params, sim_length, seed, c.tolist(), config) for c in chunks if c.size]
        with ProcessPoolExecutor(config.workers) as pool:
            return np.concatenate([np.asarray(r) for r in pool.map(_chunk, jobs)])
    return np.asarray(_chunk((params, sim_length, seed, range(n_sims), config)))


def mc_band(params, n_sims=1000, sim_length=1250, seed=0, config=None):
    """Quantiles {2.5, 50, 97.5}% of the simulated weighted Delta H(1, 2)."""
    if n_sims < 100:
        raise InvalidParamsError(f"n_sims must be >= 100, got {n_sims}")
    if sim_length < 250:
        raise InvalidParamsError(f"sim_length must be >= 250, got {sim_length}")
    config = config or TestConfig()
    samples = null_samples(params, n_sims, sim_length, seed, config)
    q025, q50, q975 = np.quantile(samples, QUANTILE_LEVELS, method="linear")
    return QuantileBand(float(q025), float(q50), float(q975), n_sims, sim_length, params, samples)


def dynamical_trace(returns, window_length=1250, shift=100, config=None, min_length=250):
    """Weighted Delta H on rolling windows, each stamped at its last index."""
    config = config or TestConfig()
    origin = getattr(returns, "origin", 0)
    windows = rolling_windows(returns, window_length, shift, min_length=min_length)
    ends, vals, errs = [], [], []
    for w in windows:
        d = delta_h(w.values, config.q, config.q_prime, True, config.theta_days, config.tau_maxes)
        ends.append(origin + w.end)
        vals.append(d.value)
        errs.append(d.error)
    return DynamicalTrace(np.asarray(ends), np.asarray(vals), np.asarray(errs))


def exceedance(trace, band):
    """Percentage of trace values strictly above q975 or strictly below q025."""
    v = np.asarray(getattr(trace, "delta_h_values", trace), dtype=float)
    if v.size == 0:
        raise DataError("empty trace")
    outside = (v > band.q975) | (v < band.q025)
    return 100.0 * outside.sum() / v.size


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except MrwError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def run_test(prices, variant=None, config=None):
    """Calibrate, simulate the null band, trace the data and count exceedances.

    ``prices`` may also be a :class:`ReturnSeries` of one-day log-returns.
    """
    config = config or TestConfig()
    variant = variant or LogNormal()
    with _stage("log_returns"):
        if isinstance(prices, ReturnSeries):
            returns = prices
        else:
            returns = log_returns(prices if isinstance(prices, PriceSeries) else PriceSeries.from_raw(prices))
        if len(returns) < config.window:
            raise DataError(f"{len(returns)} returns cannot fill one window of {config.window}")
    with _stage("calibrate"):
        cal = calibrate(returns, config.fit_range, variant=variant)
    params = cal.params
    log.info("calibrated %s", params)
    with _stage("mc_band"):
        band = mc_band(params, config.n_sims, config.sim_length, config.seed, config)
    with _stage("dynamical_trace"):
        trace = dynamical_trace(returns, config.window, config.shift, config)
    with _stage("exceedance"):
        pct = exceedance(trace, band)
    return ExceedanceReport(params, band, trace, pct, cal)


def exceedance_histogram(percentages, bin_width=5.0):
    """Counts of exceedance percentages in bins of ``bin_width`` over [0, 100]."""
    edges = np.arange(0.0, 100.0 + bin_width, bin_width)
    counts, _ = np.histogram(np.asarray(percentages, dtype=float), bins=edges)
    return edges, counts


def with_variant(params, variant):
    return replace(params, variant=variant)
