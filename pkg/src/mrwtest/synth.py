"""Synthetic Multifractal Random Walk and fractional Brownian motion paths.

Log-volatility is sampled exactly by circulant embedding of its covariance
and FFT synthesis. All generators are pure functions of their arguments and
the seed; the residual noise and the log-volatility draw from independent
child streams of the seed.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import InvalidParamsError, MomentBoundWarning

log = logging.getLogger(__name__)

DEFAULT_Q_MAX = 3.0
MAX_EMBEDDING = 2 ** 22


@dataclass(frozen=True)
class LogNormal:
    """Gaussian residuals, Gaussian log-volatility."""

    name = "lognormal"


@dataclass(frozen=True)
class StudentT:
    """Student-t residuals with ``nu`` degrees of freedom (variance kept at sigma^2 dt)."""

    nu: float = 4.0
    name = "student-t"

    def __post_init__(self):
        if not self.nu > 2:
            raise InvalidParamsError(f"Student-t residuals need nu > 2 for finite variance, got {self.nu}")


@dataclass(frozen=True)
class LogGamma:
    """Gamma-distributed log-volatility marginal with shape ``k``.

    ``theta`` scales the gamma law in units of the Gaussian log-volatility
    standard deviation, so ``theta = 1`` keeps the log-normal variance.
    """

    k: float = 1.0
    theta: float = 1.0
    name = "log-gamma"

    def __post_init__(self):
        if not (self.k > 0 and self.theta > 0):
            raise InvalidParamsError(f"log-gamma needs k > 0 and theta > 0, got k={self.k}, theta={self.theta}")


VARIANTS = {"lognormal": LogNormal, "student-t": StudentT, "log-gamma": LogGamma}


def make_variant(name, nu=4.0, k=1.0, theta=1.0):
    """Variant instance from its CLI name."""
    if name == "lognormal":
        return LogNormal()
    if name == "student-t":
        return StudentT(nu)
    if name == "log-gamma":
        return LogGamma(k, theta)
    raise InvalidParamsError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}")


@dataclass(frozen=True)
class MrwParams:
    intermittency: float
    integral_scale: float
    sigma: float = 1.0
    dt: float = 1.0
    variant: object = field(default_factory=LogNormal)

    def __post_init__(self):
        if not self.intermittency >= 0:
            raise InvalidParamsError(f"intermittency must be >= 0, got {self.intermittency}")
        if not self.dt > 0:
            raise InvalidParamsError(f"dt must be > 0, got {self.dt}")
        if not self.integral_scale > self.dt:
            raise InvalidParamsError(
                f"integral scale must exceed dt, got T={self.integral_scale}, dt={self.dt}"
            )
        if not self.sigma > 0:
            raise InvalidParamsError(f"sigma must be > 0, got {self.sigma}")
        if not isinstance(self.variant, (LogNormal, StudentT, LogGamma)):
            raise InvalidParamsError(f"unsupported variant {self.variant!r}")
        if DEFAULT_Q_MAX * self.intermittency > math.sqrt(2):
            warnings.warn(
                f"intermittency {self.intermittency} breaks the moment bound q <= sqrt(2)/lambda "
                f"for q up to {DEFAULT_Q_MAX}",
                MomentBoundWarning,
                stacklevel=3,
            )

    @property
    def log_vol_variance(self):
        """Variance of the log-volatility, lambda^2 ln(T / dt)."""
        return self.intermittency ** 2 * math.log(self.integral_scale / self.dt)

    def as_dict(self):
        d = {
            "intermittency": self.intermittency,
            "integral_scale": self.integral_scale,
            "sigma": self.sigma,
            "dt": self.dt,
            "variant": self.variant.name,
        }
        if isinstance(self.variant, StudentT):
            d["nu"] = self.variant.nu
        elif isinstance(self.variant, LogGamma):
            d["k"] = self.variant.k
            d["theta"] = self.variant.theta
        return d


@dataclass(frozen=True)
class OmegaPath:
    values: np.ndarray
    params: MrwParams


@dataclass(frozen=True)
class SyntheticPath:
    increments: np.ndarray
    cumulative: np.ndarray
    seed: object
    params: object

    def __len__(self):
        return self.increments.size


def _log_covariance(intermittency, integral_scale, dt, h):
    hf = np.maximum(np.asarray(h), 0).astype(float)
    with np.errstate(divide="ignore"):
        c = intermittency ** 2 * np.log(integral_scale / ((1.0 + hf) * dt))
    return np.where(hf <= integral_scale / dt - 1, c, 0.0)


def omega_autocovariance(params, h):
    """Log-volatility autocovariance at integer lag(s) ``h``."""
    c = _log_covariance(params.intermittency, params.integral_scale, params.dt, h)
    return float(c) if c.ndim == 0 else c


def _embedding_size(n, span):
    m = 1 << max(1, math.ceil(math.log2(2 * (n + span))))
    if m > MAX_EMBEDDING:
        warnings.warn(f"circulant embedding of size {m} capped at {MAX_EMBEDDING}", stacklevel=3)
        m = MAX_EMBEDDING
    return m


def circulant_sqrt_eigenvalues(cov):
    """Square roots of the (scaled) eigenvalues of the circulant embedding.

    ``cov`` holds autocovariances at lags ``0 .. m/2``. Negative eigenvalues
    are clamped to zero and the remainder rescaled to keep the total
    variance; a warning reports the clamped mass.
    """
    cov = np.asarray(cov, dtype=float)
    row = np.concatenate([cov, cov[-2:0:-1]])
    m = row.size
    eig = np.fft.rfft(row).real
    eig = np.concatenate([eig, eig[-2:0:-1]])
    neg = eig < 0
    if neg.any():
        total = eig.sum()
        clamped = -eig[neg].sum()
        eig = np.where(neg, 0.0, eig)
        if eig.sum() > 0:
            eig *= total / eig.sum()
        rel = clamped / max(abs(total), np.finfo(float).tiny)
        if rel > 1e-10:
            log.warning("circulant embedding: clamped negative eigenvalue mass %.3g (relative %.3g)", clamped, rel)
    return np.sqrt(eig / m)


@lru_cache(maxsize=64)
def _omega_spectrum(intermittency, integral_scale, dt, m):
    cov = _log_covariance(intermittency, integral_scale, dt, np.arange(m // 2 + 1))
    s = circulant_sqrt_eigenvalues(cov)
    s.setflags(write=False)
    return s


def stationary_gaussian(sqrt_eig, n, rng):
    """Zero-mean stationary Gaussian sequence of length ``n`` by FFT synthesis."""
    m = sqrt_eig.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return np.fft.fft(sqrt_eig * z).real[:n]


def _streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    eps_ss, omega_ss = ss.spawn(2)
    return np.random.default_rng(eps_ss), np.random.default_rng(omega_ss)


def _check_n(n):
    if int(n) != n or n < 2:
        raise InvalidParamsError(f"path length must be an integer >= 2, got {n}")
    return int(n)


def _gaussian_omega(params, n, rng):
    span = params.integral_scale / params.dt
    m = _embedding_size(n, span)
    sqrt_eig = _omega_spectrum(params.intermittency, params.integral_scale, params.dt, m)
    return stationary_gaussian(sqrt_eig, n, rng)


def _gamma_marginal(centred, params):
    """Map a centred Gaussian log-volatility onto a gamma law of equal variance.

    Probability-integral transform through the Gaussian copula, then shift
    so that E[omega] = -Var[omega], the same normalisation that makes
    E[exp(2 omega)] = 1 in the Gaussian case.
    """
    v = params.log_vol_variance
    if v == 0:
        return np.zeros_like(centred)
    k, theta = params.variant.k, params.variant.theta
    z = centred / math.sqrt(v)
    # tail-accurate inverse: upper incomplete gamma for z > 0
    g = np.where(
        z > 0,
        special.gammainccinv(k, special.ndtr(-np.abs(z))),
        special.gammaincinv(k, special.ndtr(-np.abs(z))),
    )
    scale = theta * math.sqrt(v / k)
    var = scale ** 2 * k
    return scale * g - scale * k - var


def simulate_omega(params, n, seed=0):
    """Stationary log-volatility path with mean -lambda^2 ln(T/dt)."""
    n = _check_n(n)
    _, rng = _streams(seed)
    x = _gaussian_omega(params, n, rng)
    return OmegaPath(x - params.log_vol_variance, params)


def simulate_mrw(params, n, seed=0):
    """One MRW path: increments ``eps * exp(omega)`` and their running sum."""
    n = _check_n(n)
    eps_rng, omega_rng = _streams(seed)
    centred = _gaussian_omega(params, n, omega_rng)
    variant = params.variant
    if isinstance(variant, LogGamma):
        omega = _gamma_marginal(centred, params)
    else:
        omega = centred - params.log_vol_variance

    scale = params.sigma * math.sqrt(params.dt)
    if isinstance(variant, StudentT):
        nu = variant.nu
        eps = scale * math.sqrt((nu - 2.0) / nu) * eps_rng.standard_t(nu, n)
    else:
        eps = scale * eps_rng.standard_normal(n)
    incr = eps * np.exp(omega)
    return SyntheticPath(incr, np.cumsum(incr), seed, params)


def fgn_autocovariance(hurst, k):
    """Autocovariance of unit-variance fractional Gaussian noise at lag(s) ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * hurst
    return 0.5 * ((k + 1) ** two_h - 2 * k ** two_h + np.abs(k - 1) ** two_h)


def simulate_fbm(hurst, n, seed=0, sigma=1.0):
    """Fractional Gaussian noise increments (exact) and the fBm path."""
    if not 0 < hurst < 1:
        raise InvalidParamsError(f"hurst must lie in (0, 1), got {hurst}")
    n = _check_n(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    m = 1 << max(1, math.ceil(math.log2(2 * n)))
    sqrt_eig = circulant_sqrt_eigenvalues(fgn_autocovariance(hurst, np.arange(m // 2 + 1)))
    incr = sigma * stationary_gaussian(sqrt_eig, n, rng)
    return SyntheticPath(incr, np.cumsum(incr), seed, {"hurst": hurst, "sigma": sigma})


def simulate_switching_mrw(segments, seed=0):
    """Concatenate independent MRW segments, e.g. to model a change in intermittency.

    ``segments`` is a sequence of ``(MrwParams, length)`` pairs.
    """
    root = np.random.SeedSequence(seed)
    parts = [simulate_mrw(p, n, child).increments for (p, n), child in zip(segments, root.spawn(len(segments)))]
    incr = np.concatenate(parts)
    return SyntheticPath(incr, np.cumsum(incr), seed, [p for p, _ in segments])
