"""Multifractal Random Walk simulation, generalised Hurst exponents and the
Monte Carlo exceedance test for time-varying multifractality."""

__version__ = "0.1.0"

from .calibrate import CalibrationResult, LogVolAutocov, calibrate, estimate_sigma, fit_mrw_params, log_vol_autocov
from .errors import (
    DataError,
    EstimationError,
    InvalidParamsError,
    MomentBoundWarning,
    MrwError,
    NoMultifractalityWarning,
    ScaleError,
)
from .mctest import (
    DynamicalTrace,
    ExceedanceReport,
    QuantileBand,
    TestConfig,
    dynamical_trace,
    exceedance,
    mc_band,
    run_test,
)
from .scaling import (
    GheEstimate,
    ScalingFunction,
    delta_h,
    empirical_zeta,
    ghe,
    ghe_many,
    structure_function,
    theoretical_h,
    theoretical_zeta,
    weighted_structure_function,
)
from .synth import (
    LogGamma,
    LogNormal,
    MrwParams,
    StudentT,
    omega_autocovariance,
    simulate_fbm,
    simulate_mrw,
    simulate_omega,
)
from .timeseries import PriceSeries, ReturnSeries, Window, log_returns, read_price_csv, rolling_windows
