"""Uniformly sampled time series and the numerical kernels shared by the
identification stages.

All kernels are second order: trapezoidal integration, central
differences, and linear interpolation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CSVFormatError,
    GridMismatch,
    InvalidSeries,
    OutOfRange,
    SeriesTooShort,
    WindowTooLarge,
)

__all__ = [
    "TimeSeries",
    "cumtrapz",
    "central_diff",
    "interp_at",
    "moving_average",
    "read_csv",
    "write_csv",
]

# relative tolerance on the time column of CSV input
GRID_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Real-valued signal sampled at ``t0 + i*dt``.

    ``values`` is stored as a read-only float array.
    """

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0:
            raise InvalidSeries("time series must have at least one sample")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidSeries(f"dt must be positive and finite, got {self.dt!r}")
        if not math.isfinite(self.t0):
            raise InvalidSeries(f"t0 must be finite, got {self.t0!r}")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InvalidSeries(f"non-finite value at sample {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self) - 1) * self.dt

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    def with_values(self, values) -> TimeSeries:
        """Same grid, new samples."""
        return TimeSeries(self.t0, self.dt, values)

    def same_grid(self, other: TimeSeries) -> bool:
        return (
            len(self) == len(other)
            and math.isclose(self.dt, other.dt, rel_tol=1e-12)
            and math.isclose(self.t0, other.t0, rel_tol=1e-12, abs_tol=1e-9 * self.dt)
        )

    def check_grid(self, *others: TimeSeries) -> None:
        for other in others:
            if not self.same_grid(other):
                raise GridMismatch(
                    f"grid (t0={other.t0}, dt={other.dt}, n={len(other)}) does not "
                    f"match (t0={self.t0}, dt={self.dt}, n={len(self)})"
                )

    def index_at_or_after(self, t: float) -> int:
        """Index of the first sample whose time is >= ``t`` (to rounding)."""
        i = math.ceil((t - self.t0) / self.dt - 1e-9)
        return min(max(i, 0), len(self) - 1)

    def index_at_or_before(self, t: float) -> int:
        i = math.floor((t - self.t0) / self.dt + 1e-9)
        return min(max(i, 0), len(self) - 1)

    def slice(self, start: int, stop: int | None = None) -> TimeSeries:
        """Sub-series of samples ``start:stop`` on the same grid spacing."""
        stop = len(self) if stop is None else stop
        return TimeSeries(self.t0 + start * self.dt, self.dt, self.values[start:stop])

    def window(self, t_start: float, t_end: float) -> TimeSeries:
        """Samples with ``t_start <= t <= t_end``."""
        i = self.index_at_or_after(t_start)
        j = self.index_at_or_before(t_end)
        if j < i:
            raise OutOfRange(f"window [{t_start}, {t_end}] contains no samples")
        return self.slice(i, j + 1)


def cumtrapz(s: TimeSeries) -> TimeSeries:
    """Running trapezoidal integral, starting at zero."""
    y = s.values
    out = np.zeros_like(y)
    # cumulative sum of midpoint averages, scaled once at the end
    np.cumsum(0.5 * (y[1:] + y[:-1]), out=out[1:])
    return s.with_values(out * s.dt)


def central_diff(s: TimeSeries) -> TimeSeries:
    """Second-order derivative estimate; one-sided second-order stencils at
    both ends."""
    if len(s) < 3:
        raise SeriesTooShort(f"central_diff needs at least 3 samples, got {len(s)}")
    return s.with_values(np.gradient(s.values, s.dt, edge_order=2))


def interp_at(s: TimeSeries, t: float) -> float:
    """Linear interpolation of ``s`` at time ``t``."""
    # tolerate rounding at the ends of the record
    slack = 1e-9 * s.dt
    if not (s.t0 - slack <= t <= s.t_end + slack):
        raise OutOfRange(f"t={t!r} outside [{s.t0!r}, {s.t_end!r}]")
    x = (t - s.t0) / s.dt
    i = int(math.floor(x))
    if i >= len(s) - 1:
        return float(s.values[-1])
    if i < 0:
        return float(s.values[0])
    frac = x - i
    if frac == 0.0:
        return float(s.values[i])
    return float(s.values[i] + frac * (s.values[i + 1] - s.values[i]))


def interp_many(s: TimeSeries, ts) -> np.ndarray:
    """Vectorized :func:`interp_at`."""
    return np.array([interp_at(s, t) for t in np.atleast_1d(ts)], dtype=float)


def moving_average(s: TimeSeries, window: int) -> TimeSeries:
    """Centered moving average with the window shrunk symmetrically near the
    edges, so the output has the input's length.

    An even window spans ``window // 2`` samples before and
    ``window // 2 - 1`` after the center sample.
    """
    window = int(window)
    n = len(s)
    if window < 1 or window > n:
        raise WindowTooLarge(f"window must be in [1, {n}], got {window}")
    if window == 1:
        return s.with_values(s.values.copy())

    idx = np.arange(n)
    left = np.full(n, window // 2)
    right = np.full(n, window - 1 - window // 2)
    overflow = np.maximum.reduce([left - idx, right - (n - 1 - idx), np.zeros(n, int)])
    left = np.maximum(left - overflow, 0)
    right = np.maximum(right - overflow, 0)

    csum = np.concatenate(([0.0], np.cumsum(s.values)))
    lo = idx - left
    hi = idx + right + 1
    return s.with_values((csum[hi] - csum[lo]) / (hi - lo))


def read_csv(path) -> dict[str, TimeSeries]:
    """Read a time-series CSV: header, ``t`` first, then named signals.

    Returns a ``dict`` of signal name to :class:`TimeSeries`. The time step is
    re-derived as the mean step after checking the grid is uniform.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CSVFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t":
        raise CSVFormatError(f"{path}: first column must be 't', got {header[:1]}")
    if len(header) < 2:
        raise CSVFormatError(f"{path}: no signal columns")
    if len(set(header)) != len(header):
        raise CSVFormatError(f"{path}: duplicate column names")
    body = [(line, r) for line, r in enumerate(rows[1:], start=2) if r]
    if len(body) < 2:
        raise CSVFormatError(f"{path}: need at least two data rows")
    data = np.empty((len(body), len(header)))
    for k, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise CSVFormatError(
                f"{path}: line {line} has {len(row)} columns, expected {len(header)}"
            )
        for c, cell in enumerate(row):
            try:
                data[k, c] = float(cell)
            except ValueError:
                raise CSVFormatError(
                    f"{path}: line {line}, column '{header[c]}': not a number: {cell!r}"
                ) from None
        if not np.all(np.isfinite(data[k])):
            raise CSVFormatError(f"{path}: line {line}: non-finite value")

    t = data[:, 0]
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if dt <= 0:
        raise CSVFormatError(f"{path}: time column is not increasing")
    # the median step is robust to a single bad row, so the error names it
    ref = np.median(steps)
    bad = np.flatnonzero((steps <= 0) | (np.abs(steps - ref) > GRID_RTOL * ref))
    if bad.size:
        line = body[int(bad[0]) + 1][0]
        raise CSVFormatError(f"{path}: non-uniform time grid at line {line}")
    series = {name: TimeSeries(t[0], dt, data[:, c]) for c, name in enumerate(header) if c}
    return series


def write_csv(path, columns: dict[str, TimeSeries]) -> None:
    """Write same-grid series as a CSV with a leading ``t`` column."""
    items = list(columns.items())
    if not items:
        raise ValueError("nothing to write")
    first = items[0][1]
    first.check_grid(*(s for _, s in items[1:]))
    t = first.times
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [name for name, _ in items])
        cols = [s.values for _, s in items]
        for i in range(len(first)):
            w.writerow([repr(float(t[i]))] + [repr(float(c[i])) for c in cols])
