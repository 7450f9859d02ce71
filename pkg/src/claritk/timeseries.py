"""Time-series ingest: CSV parsing, smoothing filters, resampling, export.

A :class:`TimeSeries` is an immutable pair of strictly increasing times
(seconds) and finite values. The two filters preserve the time axis and the
series length; ``resample`` produces the uniform grid the dynamic solvers
expect.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import kernels
from .errors import (
    DegenerateSpan,
    EmptyFile,
    MissingColumn,
    NonMonotonicTime,
    SeriesTooShort,
    UnparseableCell,
)


class FilterMode(enum.Enum):
    OUTLIER_REMOVAL = "outliers"
    MOVING_AVERAGE = "movavg"


@dataclass(frozen=True)
class FilterConfig:
    """Window size and z-threshold for the two smoothing filters."""

    window_n: int
    mode: FilterMode
    z_threshold: float = 1.96

    def __post_init__(self):
        min_n = 2 if self.mode is FilterMode.OUTLIER_REMOVAL else 1
        if self.window_n < min_n:
            raise ValueError(f"window_n must be >= {min_n} for {self.mode.value}")
        if not self.z_threshold > 0:
            raise ValueError("z_threshold must be positive")


@dataclass(frozen=True)
class TimeSeries:
    """Timestamped scalar samples.

    ``times`` are seconds, either since an epoch or since the start of the
    record; ``time_origin`` says which ("epoch" or "start").
    """

    name: str
    times: np.ndarray
    values: np.ndarray
    unit: str = ""
    time_origin: str = "start"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size:
            raise ValueError("times and values must be 1-D and equally long")
        if t.size < 1:
            raise ValueError("series must contain at least one sample")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise ValueError("times and values must be finite")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def with_values(self, values, name=None) -> "TimeSeries":
        return TimeSeries(name if name is not None else self.name,
                          self.times, values, self.unit, self.time_origin)


def _parse_time(text):
    try:
        return float(text)
    except ValueError:
        pass
    iso = text.strip().replace("Z", "+00:00")
    dt = datetime.fromisoformat(iso)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def parse_timeseries_csv(data: bytes, time_column: str = "t",
                         value_column: str = "value",
                         unit: str | None = None,
                         name: str | None = None) -> TimeSeries:
    """Parse a two-column CSV (header row required) into a TimeSeries.

    Leading ``#`` comment lines are skipped; ``# unit:``, ``# name:`` and
    ``# origin:`` comments written by :func:`export_csv` are honored unless
    overridden by the arguments. Time cells may be plain numbers or ISO-8601
    timestamps (converted to epoch seconds).
    """
    text = data.decode("utf-8-sig")
    comment_meta = {}
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                comment_meta[key.strip().lower()] = val.strip()
            continue
        if line.strip():
            lines.append(line)
    if not lines:
        raise EmptyFile("no header row found")
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    if time_column not in header:
        raise MissingColumn(time_column)
    if value_column not in header:
        raise MissingColumn(value_column)
    it, iv = header.index(time_column), header.index(value_column)
    if len(rows) < 2:
        raise EmptyFile("no data rows")
    times, values = [], []
    uses_timestamps = False
    for r, row in enumerate(rows[1:], start=1):
        if len(row) <= max(it, iv):
            raise UnparseableCell(r, value_column if len(row) <= iv else time_column)
        try:
            t = _parse_time(row[it])
            uses_timestamps = uses_timestamps or not _is_number(row[it])
        except ValueError:
            raise UnparseableCell(r, time_column) from None
        try:
            v = float(row[iv])
        except ValueError:
            raise UnparseableCell(r, value_column) from None
        if not math.isfinite(v) or not math.isfinite(t):
            raise UnparseableCell(r, value_column if not math.isfinite(v) else time_column)
        if times and t <= times[-1]:
            raise NonMonotonicTime(r)
        times.append(t)
        values.append(v)
    origin = comment_meta.get("origin", "epoch" if uses_timestamps else "start")
    return TimeSeries(
        name=name if name is not None else comment_meta.get("name", value_column),
        times=np.array(times),
        values=np.array(values),
        unit=unit if unit is not None else comment_meta.get("unit", ""),
        time_origin=origin,
    )


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _fmt(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def export_csv(ts: TimeSeries) -> bytes:
    """Serialize to two-column CSV; ``parse_timeseries_csv`` round-trips it.

    Metadata that differs from the defaults is recorded in leading comment
    lines (``# unit: m3/h`` etc.).
    """
    buf = io.StringIO()
    if ts.name and ts.name != "value":
        buf.write(f"# name: {ts.name}\n")
    if ts.unit:
        buf.write(f"# unit: {ts.unit}\n")
    if ts.time_origin != "start":
        buf.write(f"# origin: {ts.time_origin}\n")
    buf.write("t,value\n")
    for t, v in zip(ts.times, ts.values):
        buf.write(f"{_fmt(t)},{_fmt(v)}\n")
    return buf.getvalue().encode("utf-8")


def remove_outliers(ts: TimeSeries, cfg: FilterConfig) -> TimeSeries:
    """Replace block outliers by their block mean (see kernel docstring).

    The subset mean and sample standard deviation include the candidate
    element; zero-variance blocks never flag anything.
    """
    if cfg.mode is not FilterMode.OUTLIER_REMOVAL:
        raise ValueError("config mode must be OUTLIER_REMOVAL")
    if len(ts) < cfg.window_n:
        raise SeriesTooShort(f"series length {len(ts)} < window {cfg.window_n}")
    return ts.with_values(kernels.remove_outliers(ts.values, cfg.window_n, cfg.z_threshold))


def moving_average(ts: TimeSeries, cfg: FilterConfig) -> TimeSeries:
    """Centered moving mean, truncated at the boundaries."""
    if cfg.mode is not FilterMode.MOVING_AVERAGE:
        raise ValueError("config mode must be MOVING_AVERAGE")
    return ts.with_values(kernels.moving_average(ts.values, cfg.window_n))


def resample(ts: TimeSeries, dt: float) -> TimeSeries:
    """Linear interpolation onto a uniform grid from first to last time.

    The last sample is always kept, so the final interval may be shorter
    than ``dt`` when the span is not a multiple of it.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if len(ts) < 2:
        raise SeriesTooShort("resample needs at least 2 samples")
    t0, t1 = ts.times[0], ts.times[-1]
    if t1 == t0:
        raise DegenerateSpan("first and last time coincide")
    n = int(math.floor((t1 - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(n + 1)
    if grid[-1] < t1 - 1e-9 * dt:
        grid = np.append(grid, t1)
    else:
        grid[-1] = t1
    vals = np.interp(grid, ts.times, ts.values)
    vals[0] = ts.values[0]
    vals[-1] = ts.values[-1]
    return TimeSeries(ts.name, grid, vals, ts.unit, ts.time_origin)
