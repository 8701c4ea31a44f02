"""Observation series and the CSV formats used by the CLI.

Data files carry a mandatory header ``t,y1,...,yp`` with times in the
first column.  Floats are written with 17 significant digits so a
round-trip through disk reproduces the array bit-exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .ode import TimeGrid

FLOAT_FMT = "{:.17g}"


@dataclass(frozen=True)
class ObservationSeries:
    """Times t_1..t_n with observations y_1..y_n in R^p.

    ``t0`` is the time of the (unobserved) initial state.  When left
    None it defaults to one grid interval before the first observation,
    t_1 - (t_2 - t_1), matching the equally spaced setups where data
    start one step after the initial condition.
    """

    times: np.ndarray
    y: np.ndarray
    t0: float | None = None

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if times.ndim != 1 or y.ndim != 2 or y.shape[0] != times.size:
            raise ValueError("times must be (n,), observations (n, p)")
        if times.size and not np.all(np.isfinite(times)):
            raise ValueError("non-finite observation times")
        if y.size and not np.all(np.isfinite(y)):
            raise ValueError("missing or non-finite observations")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("observation times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "y", y)
        if self.t0 is not None:
            t0 = float(self.t0)
            if times.size and t0 >= times[0]:
                raise ValueError("t0 must precede the first observation time")
            object.__setattr__(self, "t0", t0)

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def p(self) -> int:
        return self.y.shape[1]

    def start_time(self) -> float:
        if self.t0 is not None:
            return self.t0
        if self.n < 2:
            raise ValueError("t0 is required when fewer than two observations")
        return float(self.times[0] - (self.times[1] - self.times[0]))

    def grid(self) -> TimeGrid:
        """Time grid [t0, t_1, ..., t_n]."""
        return TimeGrid(np.concatenate(([self.start_time()], self.times)))


def write_series_csv(path, series: ObservationSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"y{k + 1}" for k in range(series.p)])
        for t, row in zip(series.times, series.y):
            w.writerow([FLOAT_FMT.format(t)] + [FLOAT_FMT.format(v) for v in row])


def read_series_csv(path, t0: float | None = None) -> ObservationSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip().lower() != "t":
        raise DataFormatError(f"{path}: expected a header row starting with 't'")
    header = [c.strip() for c in rows[0]]
    p = len(header) - 1
    if p < 1 or header[1:] != [f"y{k + 1}" for k in range(p)]:
        raise DataFormatError(f"{path}: header must be t,y1,...,yp (got {header})")
    body = [r for r in rows[1:] if r]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as err:
        raise DataFormatError(f"{path}: non-numeric value in data rows: {err}") from None
    if data.size == 0:
        raise DataFormatError(f"{path}: no data rows")
    if data.shape[1] != p + 1:
        raise DataFormatError(f"{path}: ragged rows")
    return ObservationSeries(times=data[:, 0], y=data[:, 1:], t0=t0)
