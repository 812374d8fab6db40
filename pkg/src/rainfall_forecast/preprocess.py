"""Snapshot matrices, min-max scaling, sliding windows and chronological splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateScaleError,
    InsufficientDataError,
    RangeError,
    SplitError,
    StructuralError,
)
from .ingest import GridPoint, Month, RainfallGrid, format_month, month_range


@dataclass(frozen=True)
class SnapshotMatrix:
    """Locations x months; column j is the state of every grid point in month j."""

    data: np.ndarray
    months: tuple[Month, ...]
    points: tuple[GridPoint, ...] = ()

    def __post_init__(self):
        if self.data.ndim != 2:
            raise StructuralError("snapshot data must be 2-D")
        n, m = self.data.shape
        if n < 1 or m < 2:
            raise StructuralError(f"need at least 1 row and 2 columns, got {n}x{m}")
        if len(self.months) != m:
            raise StructuralError(f"{len(self.months)} month labels for {m} columns")
        if self.points and len(self.points) != n:
            raise StructuralError(f"{len(self.points)} point labels for {n} rows")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lat:lon", *(format_month(m) for m in self.months)])
            labels = [p.label() for p in self.points] or [str(i) for i in range(self.shape[0])]
            for label, row in zip(labels, self.data):
                w.writerow([label, *(repr(float(v)) for v in row)])


def build_snapshot_matrix(grid: RainfallGrid, start_year: int, stop_year: int) -> SnapshotMatrix:
    """Columns Jan(start_year) .. Dec(stop_year), both years inclusive."""
    if stop_year < start_year:
        raise RangeError(f"stop year {stop_year} precedes start year {start_year}")
    months = month_range((start_year, 1), (stop_year, 12))
    try:
        first = grid.month_index(months[0])
        last = grid.month_index(months[-1])
    except KeyError:
        span = f"{format_month(grid.months[0])}..{format_month(grid.months[-1])}" if grid.months else "empty"
        raise RangeError(f"grid covers {span}, cannot build {start_year}-{stop_year}") from None
    return SnapshotMatrix(grid.values[:, first : last + 1].copy(), months, grid.points)


@dataclass(frozen=True)
class Normalizer:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateScaleError(f"max ({self.max}) must exceed min ({self.min})")

    @property
    def scale(self) -> float:
        return self.max - self.min


def fit_normalizer(series, train_fraction: float = 0.8) -> Normalizer:
    """Min/max over the first floor(train_fraction * len) values only."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) < 2:
        raise InsufficientDataError("need a 1-D series of length >= 2")
    if not 0 < train_fraction <= 1:
        raise ValueError(f"train_fraction must lie in (0, 1], got {train_fraction}")
    k = _prefix_len(len(series), train_fraction)
    prefix = series[:k]
    if k < 2 or prefix.min() == prefix.max():
        raise DegenerateScaleError("training prefix is constant; cannot scale")
    return Normalizer(float(prefix.min()), float(prefix.max()))


def _prefix_len(n, fraction):
    # tolerate 0.8 * 10 landing on 7.999...
    return int(math.floor(n * fraction + 1e-9))


def normalize(norm: Normalizer, series) -> np.ndarray:
    return (np.asarray(series, dtype=float) - norm.min) / norm.scale


def denormalize(norm: Normalizer, series) -> np.ndarray:
    return np.asarray(series, dtype=float) * norm.scale + norm.min


@dataclass(frozen=True)
class WindowedDataset:
    """Stride-1 input/target windows cut from one series.

    ``target_start[i]`` is the series index of the first target value of
    sample ``i``; the input window covers ``target_start[i] - W .. target_start[i] - 1``.
    """

    inputs: np.ndarray  # (N, W)
    targets: np.ndarray  # (N, H)
    input_width: int
    output_width: int
    target_start: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.target_start is None:
            object.__setattr__(self, "target_start", np.arange(len(self.inputs)) + self.input_width)

    def __len__(self):
        return len(self.inputs)

    def subset(self, idx) -> WindowedDataset:
        return WindowedDataset(
            self.inputs[idx], self.targets[idx], self.input_width, self.output_width, self.target_start[idx]
        )


def make_windows(series, input_width: int, output_width: int = 1) -> WindowedDataset:
    series = np.asarray(series, dtype=float)
    if input_width < 1 or output_width < 1:
        raise ValueError("window widths must be positive")
    n = len(series) - input_width - output_width + 1
    if n < 1:
        raise InsufficientDataError(
            f"series of length {len(series)} is too short for W={input_width}, H={output_width}"
        )
    starts = np.arange(n)
    inputs = series[starts[:, None] + np.arange(input_width)]
    targets = series[starts[:, None] + input_width + np.arange(output_width)]
    return WindowedDataset(inputs, targets, input_width, output_width, starts + input_width)


def split_train_test(dataset: WindowedDataset, train_fraction: float = 0.8):
    """Chronological split; train samples come first.

    For H > 1 the last H - 1 training samples are dropped so that no training
    target reaches into the test period.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    n_train = _prefix_len(n, train_fraction)
    if n_train < 1 or n_train >= n:
        raise SplitError(f"{n} samples at fraction {train_fraction} leaves an empty side")
    keep_train = n_train - (dataset.output_width - 1)
    if keep_train < 1:
        raise SplitError("no training samples remain after removing overlap with the test period")
    return dataset.subset(slice(0, keep_train)), dataset.subset(slice(n_train, n))
