"""Seasonal series container, transforms and CSV ingestion.

Observations are held as an ``(n_years, s)`` grid ``values[r, m]``.  Public
period and year labels are 1-based; linear time is ``t = s*(r - 1) + m``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import BadValue, IncompleteYear, NonPositive, ParseError

__all__ = [
    "SeasonalSeries",
    "from_flat",
    "log_transform",
    "read_csv",
    "write_csv",
    "read_values",
    "write_values",
    "to_time",
    "from_time",
]

TRANSFORMS = ("none", "log", "log_plus_c")


def to_time(r, m, s):
    """Linear time index of year ``r`` and period ``m`` (all 1-based)."""
    if not 1 <= m <= s:
        raise ValueError(f"period {m} outside 1..{s}")
    return s * (r - 1) + m


def from_time(t, s):
    """Inverse of :func:`to_time`; returns ``(r, m)``.

    Works for ``t <= 0`` too, which is convenient when resolving lags that
    run off the start of the sample.
    """
    r = (t - 1) // s + 1
    return r, t - s * (r - 1)


@dataclass(frozen=True, eq=False)
class SeasonalSeries:
    """Complete years of a seasonal series.

    Parameters
    ----------
    values : array_like of shape (n_years, s)
        Observation grid; row ``r - 1`` is year ``r``.
    label : str
        Free-text identifier.
    transform : {"none", "log", "log_plus_c"}
        Transform already applied to ``values``.
    shift : float
        The constant ``c`` when ``transform == "log_plus_c"``.
    """

    values: np.ndarray
    label: str = ""
    transform: str = "none"
    shift: float = 0.0
    _flat: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("values must be a 2-d (n_years, s) grid")
        n_years, s = vals.shape
        if s < 1:
            raise ValueError("need at least one period per year")
        if n_years < 2:
            raise IncompleteYear(f"need at least 2 complete years, got {n_years}")
        if not np.all(np.isfinite(vals)):
            r, m = np.argwhere(~np.isfinite(vals))[0] + 1
            raise BadValue(f"non-finite value at year {r}, period {m}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")
        vals.setflags(write=False)
        flat = vals.reshape(-1)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_flat", flat)

    @property
    def s(self):
        return self.values.shape[1]

    @property
    def n_years(self):
        return self.values.shape[0]

    def __len__(self):
        return self.values.size

    @property
    def flat(self):
        """Read-only view of the observations in linear-time order."""
        return self._flat

    def value(self, r, m):
        """Observation at 1-based year ``r`` and period ``m``."""
        return float(self.values[r - 1, m - 1])

    def head(self, n_years):
        """The first ``n_years`` years as a new series."""
        return SeasonalSeries(
            self.values[:n_years], self.label, self.transform, self.shift
        )


def from_flat(values, s, label="", transform="none", shift=0.0):
    """Build a :class:`SeasonalSeries` from a linear-time sequence.

    Raises
    ------
    IncompleteYear
        If the length is not a positive multiple of ``s``.
    BadValue
        If any entry is NaN or infinite.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if s < 1 or arr.size == 0 or arr.size % s:
        raise IncompleteYear(
            f"length {arr.size} is not a positive multiple of s={s}"
        )
    if not np.all(np.isfinite(arr)):
        raise BadValue(f"non-finite value at t={int(np.argmin(np.isfinite(arr))) + 1}")
    return SeasonalSeries(arr.reshape(-1, s), label, transform, shift)


def log_transform(series, c=None):
    """Natural log of every observation, optionally after adding ``c``.

    Raises :class:`NonPositive` naming the first offending (year, period).
    """
    shifted = series.values if c is None else series.values + c
    bad = np.argwhere(shifted <= 0)
    if bad.size:
        r, m = bad[0]
        raise NonPositive(int(r) + 1, int(m) + 1, float(series.values[r, m]))
    if c is None:
        return SeasonalSeries(np.log(shifted), series.label, "log")
    return SeasonalSeries(np.log(shifted), series.label, "log_plus_c", float(c))


def _parse_float(text, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(line, f"cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise ParseError(line, f"non-finite value {text!r}")
    return value


def _read_rows(path, layout="flat_column", column=-1):
    with Path(path).open(newline="") as fh:
        rows = [
            (i, [f.strip() for f in row])
            for i, row in enumerate(csv.reader(fh), start=1)
            if row and any(f.strip() for f in row)
        ]
    if rows and _is_header(rows[0][1], layout, column):
        rows = rows[1:]
    return rows


def read_values(path, column=-1):
    """Read one numeric column (optional header) as a 1-d array.

    Unlike :func:`read_csv` the length need not be a whole number of years,
    which suits residual sequences shortened by differencing.
    """
    rows = _read_rows(path, "flat_column", column)
    return np.array([_parse_float(fields[column], line) for line, fields in rows])


def write_values(values, path, header="value"):
    """Write a 1-d sequence as a single CSV column with 17 significant digits."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow([header])
        for v in np.asarray(values, dtype=float).ravel():
            writer.writerow([f"{v:.17g}"])


def read_csv(path, layout="flat_column", s=12, label=None, column=-1):
    """Read a seasonal series from a CSV file.

    Parameters
    ----------
    path : str or Path
    layout : {"flat_column", "year_by_period"}
        ``flat_column`` holds one observation per row in time order (when a
        row has several fields, ``column`` selects one).  ``year_by_period``
        holds a year label followed by ``s`` values on each row.
    s : int
        Periods per year.
    label : str, optional
        Defaults to the file stem.
    column : int
        Field used for ``flat_column`` rows.

    A single header row is detected when its fields do not parse as numbers.
    """
    path = Path(path)
    if layout not in ("flat_column", "year_by_period"):
        raise ValueError(f"unknown layout {layout!r}")
    rows = _read_rows(path, layout, column)

    if layout == "flat_column":
        data = [_parse_float(fields[column], line) for line, fields in rows]
        return from_flat(data, s, label=label or path.stem)

    grid = []
    for line, fields in rows:
        if len(fields) != s + 1:
            raise IncompleteYear(
                f"line {line}: expected year label plus {s} values, "
                f"got {len(fields)} fields"
            )
        grid.append([_parse_float(f, line) for f in fields[1:]])
    if not grid:
        raise IncompleteYear("no data rows")
    return SeasonalSeries(np.array(grid), label or path.stem)


def _is_header(fields, layout, column):
    probe = fields[column] if layout == "flat_column" else fields[-1]
    try:
        float(probe)
    except ValueError:
        return True
    return False


def write_csv(series, path, layout="flat_column", header=True):
    """Write ``series`` as CSV using 17 significant digits (exact round trip)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if layout == "flat_column":
            if header:
                writer.writerow([series.label or "value"])
            for v in series.flat:
                writer.writerow([f"{v:.17g}"])
        elif layout == "year_by_period":
            if header:
                writer.writerow(["year"] + [f"p{m}" for m in range(1, series.s + 1)])
            for r, row in enumerate(series.values, start=1):
                writer.writerow([r] + [f"{v:.17g}" for v in row])
        else:
            raise ValueError(f"unknown layout {layout!r}")
