"""Price series ingestion, log-returns and rolling windows."""
import csv
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

MIN_WINDOW = 250


@dataclass(frozen=True)
class PriceSeries:
    """Strictly positive prices on an increasing integer (day) index.

    ``timestamps`` are optional labels (ISO dates or day numbers) carried
    along for output only; all computation uses positional indices.
    """

    prices: np.ndarray
    timestamps: tuple = None

    def __post_init__(self):
        p = np.asarray(self.prices, dtype=float)
        if p.ndim != 1:
            raise DataError("prices must be one-dimensional")
        if p.size < 2:
            raise DataError(f"need at least 2 prices, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise DataError("prices contain non-finite values; use PriceSeries.from_raw to drop them")
        if np.any(p <= 0):
            bad = int(np.argmax(p <= 0))
            raise DataError(f"non-positive price {p[bad]!r} at row {bad}")
        object.__setattr__(self, "prices", p)
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != p.size:
                raise DataError("timestamps and prices differ in length")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise DataError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    @classmethod
    def from_raw(cls, prices, timestamps=None):
        """Build a series, dropping rows whose price is not finite."""
        p = np.asarray(prices, dtype=float)
        keep = np.isfinite(p)
        dropped = int(p.size - keep.sum())
        if dropped:
            warnings.warn(f"dropped {dropped} row(s) with non-finite prices", stacklevel=2)
            p = p[keep]
            if timestamps is not None:
                timestamps = [t for t, k in zip(timestamps, keep) if k]
        return cls(p, None if timestamps is None else tuple(timestamps))

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class ReturnSeries:
    """Log-returns at scale ``tau``; ``origin`` is the index of the first one."""

    values: np.ndarray
    tau: int = 1
    origin: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DataError("returns must be one-dimensional")
        if self.tau < 1:
            raise DataError(f"tau must be >= 1, got {self.tau}")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class Window:
    """A contiguous slice ``[start, start + length)`` of a return series."""

    start: int
    length: int
    values: np.ndarray = field(repr=False)

    @property
    def end(self):
        """Index of the last return in the window (results are stamped here)."""
        return self.start + self.length - 1


def as_array(returns):
    """Return the float array behind a ReturnSeries, Window or array-like."""
    return np.asarray(getattr(returns, "values", returns), dtype=float)


def log_returns(prices, tau=1):
    """Log-returns ``log p[t + tau] - log p[t]`` for ``t = 0 .. N - tau - 1``."""
    if not isinstance(prices, PriceSeries):
        prices = PriceSeries.from_raw(prices)
    n = len(prices)
    if tau < 1:
        raise DataError(f"tau must be >= 1, got {tau}")
    if tau >= n:
        raise DataError(f"tau={tau} leaves no returns for {n} prices")
    lp = np.log(prices.prices)
    return ReturnSeries(lp[tau:] - lp[:-tau], tau=tau, origin=0)


def rolling_windows(series, length, shift, min_length=MIN_WINDOW):
    """Overlapping windows starting at 0, shift, 2*shift, ...

    Only windows fully contained in the series are produced, so the last
    window may end before the final observation.
    """
    values = as_array(series)
    if shift < 1:
        raise DataError(f"shift must be >= 1, got {shift}")
    if length < min_length:
        raise DataError(f"window length {length} below minimum {min_length}")
    if length > values.size:
        raise DataError(f"window length {length} exceeds series length {values.size}")
    starts = range(0, values.size - length + 1, shift)
    return [Window(s, length, values[s : s + length]) for s in starts]


def read_price_csv(path):
    """Read ``date,price`` (with header) or a single ``price`` column.

    Rows with an empty or non-finite price are dropped with a warning.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = [c.strip().lower() for c in rows[0]]
    if "price" in header:
        col = header.index("price")
        date_col = header.index("date") if "date" in header else None
        body = rows[1:]
    else:
        try:
            float(rows[0][-1])
        except ValueError:
            raise DataError(f"{path}: expected a 'price' column header") from None
        col, date_col, body = len(rows[0]) - 1, (0 if len(rows[0]) > 1 else None), rows

    prices, dates = [], []
    for lineno, row in enumerate(body, start=2 if body is not rows else 1):
        cell = row[col].strip() if col < len(row) else ""
        try:
            prices.append(float(cell) if cell else np.nan)
        except ValueError:
            raise DataError(f"{path}:{lineno}: cannot parse price {cell!r}") from None
        if date_col is not None:
            dates.append(row[date_col].strip())
    log.debug("read %d rows from %s", len(prices), path)
    if date_col is None:
        return PriceSeries.from_raw(prices, None)
    return PriceSeries.from_raw(prices, _day_indices(dates))


def _day_indices(dates):
    """Integer day numbers compare numerically; anything else (ISO dates) as text."""
    try:
        return [int(d) for d in dates]
    except ValueError:
        return dates
