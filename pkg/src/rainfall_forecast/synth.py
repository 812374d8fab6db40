"""Synthetic data with known ground truth.

``gen_linear_system`` produces snapshots of a real linear map with a chosen
spectrum, which exact DMD must recover. ``gen_seasonal`` produces a
monsoon-like monthly series for exercising the LSTM pipeline without IMD data.
"""

from __future__ import annotations

import calendar
import datetime as dt
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SpecError
from .ingest import (
    DailyRecords,
    GridPoint,
    Month,
    RainfallGrid,
    month_from_ordinal,
    month_ordinal,
    month_range,
)
from .preprocess import SnapshotMatrix


@dataclass(frozen=True)
class LinearSystemSpec:
    n: int
    eigenvalues: Sequence[complex]
    m: int
    seed: int = 0
    initial_state: Sequence[float] | None = None


@dataclass(frozen=True)
class LinearSystem:
    snapshots: SnapshotMatrix
    eigenvalues: np.ndarray
    propagator: np.ndarray  # A with x_{t+1} = A x_t


def _real_blocks(eigenvalues, tol=1e-12):
    """Pair conjugates; returns a list of 1x1 / 2x2 real blocks."""
    remaining = [complex(z) for z in eigenvalues]
    blocks = []
    while remaining:
        z = remaining.pop(0)
        if abs(z.imag) <= tol:
            blocks.append(np.array([[z.real]]))
            continue
        j = next((k for k, w in enumerate(remaining) if abs(w - z.conjugate()) <= tol), None)
        if j is None:
            raise SpecError(f"eigenvalue {z} has no conjugate partner")
        remaining.pop(j)
        a, b = z.real, abs(z.imag)
        blocks.append(np.array([[a, -b], [b, a]]))
    return blocks


def gen_linear_system(spec: LinearSystemSpec) -> LinearSystem:
    """Iterate x_{t+1} = A x_t where A has the requested spectrum.

    A = Q diag(B, 0) Q^T for a random orthogonal Q and the real block form B of
    the spectrum. When the spectrum has k < n values the remaining eigenvalues
    are zero and the default initial state lies in the k-dimensional invariant
    subspace, so the snapshot matrix has rank k.
    """
    lam = np.asarray(spec.eigenvalues, dtype=complex)
    k = len(lam)
    if k == 0 or k > spec.n:
        raise SpecError(f"need 1..n eigenvalues, got {k} for n={spec.n}")
    if np.any(np.abs(lam) > 1.05):
        raise SpecError("eigenvalue magnitudes must not exceed 1.05")
    if spec.m < 2:
        raise SpecError("need at least 2 snapshots")
    blocks = _real_blocks(lam)

    rng = np.random.default_rng(spec.seed)
    B = np.zeros((spec.n, spec.n))
    i = 0
    for blk in blocks:
        s = blk.shape[0]
        B[i : i + s, i : i + s] = blk
        i += s
    Q, _ = np.linalg.qr(rng.standard_normal((spec.n, spec.n)))
    A = Q @ B @ Q.T

    if spec.initial_state is None:
        z0 = np.zeros(spec.n)
        z0[:k] = rng.uniform(0.5, 1.5, size=k) * rng.choice([-1.0, 1.0], size=k)
        x = Q @ z0
    else:
        x = np.asarray(spec.initial_state, dtype=float)
        if x.shape != (spec.n,):
            raise SpecError(f"initial state must have length {spec.n}")

    X = np.empty((spec.n, spec.m))
    for t in range(spec.m):
        X[:, t] = x
        x = A @ x
    months = tuple(month_from_ordinal(month_ordinal((2000, 1)) + t) for t in range(spec.m))
    return LinearSystem(SnapshotMatrix(X, months), lam, A)


@dataclass(frozen=True)
class SeasonalSpec:
    amplitude: float = 10.0  # mm/day at the seasonal peak
    length: int = 480
    phase: float = 0.0  # months
    noise: float = 0.0  # standard deviation, mm/day
    trend: float = 0.0  # mm/day per month
    seed: int = 0
    period: int = 12

    def __post_init__(self):
        if self.length < 2 * self.period:
            raise SpecError(f"length must be at least {2 * self.period}")
        if self.noise < 0:
            raise SpecError("noise must be non-negative")


def gen_seasonal(spec: SeasonalSpec) -> np.ndarray:
    t = np.arange(spec.length)
    # reduce before sin() so the noiseless series is exactly periodic
    cycle = np.mod(t + spec.phase, spec.period)
    wave = np.maximum(0.0, np.sin(2 * np.pi * cycle / spec.period)) ** 2
    x = spec.amplitude * wave + spec.trend * t
    if spec.noise > 0:
        x = x + np.random.default_rng(spec.seed).normal(0.0, spec.noise, size=spec.length)
    return np.maximum(x, 0.0)


def seasonal_grid(
    points: Sequence[GridPoint], first_month: Month, spec: SeasonalSpec
) -> RainfallGrid:
    """Grid whose points share the seasonal shape with point-specific phase and noise."""
    rows = []
    for i, _ in enumerate(points):
        rows.append(
            gen_seasonal(
                SeasonalSpec(
                    amplitude=spec.amplitude * (1 + 0.1 * i),
                    length=spec.length,
                    phase=spec.phase + 0.25 * i,
                    noise=spec.noise,
                    trend=spec.trend,
                    seed=spec.seed + i,
                    period=spec.period,
                )
            )
        )
    last = month_from_ordinal(month_ordinal(first_month) + spec.length - 1)
    return RainfallGrid(tuple(points), month_range(first_month, last), np.array(rows))


def linear_grid(system: LinearSystem, first_month: Month, offset: float | None = None) -> RainfallGrid:
    """Wrap linear-system snapshots as a rainfall grid.

    Rainfall must be non-negative, so a constant ``offset`` is added; the default
    lifts the minimum to zero. A constant offset is itself a steady (lambda = 1)
    mode, so DMD needs one extra rank to capture it.
    """
    X = system.snapshots.data
    if offset is None:
        offset = max(0.0, -float(X.min()))
    n, m = X.shape
    points = tuple(GridPoint(20.0 + 0.25 * i, 90.0) for i in range(n))
    last = month_from_ordinal(month_ordinal(first_month) + m - 1)
    return RainfallGrid(points, month_range(first_month, last), X + offset)


def daily_from_monthly(grid: RainfallGrid) -> DailyRecords:
    """Spread each monthly mean over every day of its month (constant daily rain)."""
    days = []
    cols = []
    for j, (year, mon) in enumerate(grid.months):
        for d in range(1, calendar.monthrange(year, mon)[1] + 1):
            days.append(dt.date(year, mon, d))
            cols.append(j)
    return DailyRecords(grid.points, tuple(days), grid.values[:, cols].copy())
