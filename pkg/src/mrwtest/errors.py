"""Exception and warning types shared across the package."""


class MrwError(Exception):
    """Base class for all package errors."""


class InvalidParamsError(MrwError, ValueError):
    """Model or configuration parameters violate their constraints."""


class DataError(MrwError, ValueError):
    """Input data is malformed, too short, or outside the valid domain."""


class ScaleError(DataError):
    """Requested aggregation scale does not fit in the series."""


class EstimationError(MrwError, ArithmeticError):
    """A numerical estimate could not be formed (degenerate moments, fits)."""


class MomentBoundWarning(UserWarning):
    """Moment order too large for the intermittency (q > sqrt(2) / lambda)."""


class NoMultifractalityWarning(UserWarning):
    """Log-volatility autocovariance shows no decay; intermittency set to 0."""
