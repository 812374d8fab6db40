"""Loading daily gridded rainfall and aggregating it to monthly means.

The ingestion boundary is a long-format CSV with header ``lat,lon,date,rain_mm``.
Missing days are written as ``NA`` and held internally as NaN.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmptySelectionError,
    MissingDataError,
    ParseError,
    PointNotFoundError,
    StructuralError,
)

DAILY_HEADER = ("lat", "lon", "date", "rain_mm")
MONTHLY_HEADER = ("lat", "lon", "year", "month", "rain_mm_per_day")
MISSING = "NA"

# coordinates are matched after rounding to this many decimals
COORD_DECIMALS = 6

Month = tuple[int, int]


@dataclass(frozen=True, order=True)
class GridPoint:
    lat: float
    lon: float

    def key(self) -> tuple[float, float]:
        return (round(self.lat, COORD_DECIMALS), round(self.lon, COORD_DECIMALS))

    def label(self) -> str:
        return f"{self.lat:g}:{self.lon:g}"


@dataclass(frozen=True)
class BoundingBox:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ValueError(f"bounding box needs min < max on both axes, got {self}")

    def contains(self, point: GridPoint) -> bool:
        lat, lon = point.key()
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max


# North-east India study region
NE_INDIA_BBOX = BoundingBox(lat_min=21.89, lat_max=30.0, lon_min=89.81, lon_max=98.0)


@dataclass(frozen=True)
class DailyRecords:
    points: tuple[GridPoint, ...]
    dates: tuple[dt.date, ...]
    values: np.ndarray  # (n_points, n_days), NaN = missing

    def __post_init__(self):
        _check_unique(self.points)
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise StructuralError("dates must be strictly ascending")
        if self.values.shape != (len(self.points), len(self.dates)):
            raise StructuralError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.points)} points x {len(self.dates)} days"
            )


@dataclass(frozen=True)
class RainfallGrid:
    points: tuple[GridPoint, ...]
    months: tuple[Month, ...]
    values: np.ndarray  # (n_points, n_months), mm/day

    def __post_init__(self):
        _check_unique(self.points)
        for a, b in zip(self.months, self.months[1:]):
            if next_month(a) != b:
                raise StructuralError(f"months not contiguous: {a} followed by {b}")
        if self.values.shape != (len(self.points), len(self.months)):
            raise StructuralError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.points)} points x {len(self.months)} months"
            )
        if np.any(self.values < 0):
            raise StructuralError("monthly rainfall must be non-negative")

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_months(self) -> int:
        return len(self.months)

    def month_index(self, month: Month) -> int:
        if not self.months:
            raise KeyError(month)
        idx = month_ordinal(month) - month_ordinal(self.months[0])
        if not 0 <= idx < len(self.months):
            raise KeyError(month)
        return idx


def _check_unique(points):
    keys = [p.key() for p in points]
    if len(set(keys)) != len(keys):
        raise StructuralError("duplicate grid points")


def month_ordinal(month: Month) -> int:
    year, mon = month
    return year * 12 + (mon - 1)


def month_from_ordinal(k: int) -> Month:
    return (k // 12, k % 12 + 1)


def next_month(month: Month) -> Month:
    return month_from_ordinal(month_ordinal(month) + 1)


def month_range(first: Month, last: Month) -> tuple[Month, ...]:
    """Inclusive range of calendar months."""
    return tuple(month_from_ordinal(k) for k in range(month_ordinal(first), month_ordinal(last) + 1))


def format_month(month: Month) -> str:
    return f"{month[0]:04d}-{month[1]:02d}"


def _parse_float(text, what, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"invalid {what} {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", line)
    return value


def load_daily_csv(path) -> DailyRecords:
    """Read a daily rainfall CSV.

    Rows may appear in any order; the result is sorted by (lat, lon) and date.
    A point lacking a row for some date inside the covered range is treated as
    missing on that day.
    """
    cells: dict[tuple[float, float], dict[dt.date, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DAILY_HEADER:
            raise ParseError(f"expected header {','.join(DAILY_HEADER)}, got {header}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line)
            lat = _parse_float(row[0], "lat", line)
            lon = _parse_float(row[1], "lon", line)
            try:
                day = dt.date.fromisoformat(row[2].strip())
            except ValueError:
                raise ParseError(f"invalid date {row[2]!r}", line) from None
            raw = row[3].strip()
            if raw == MISSING:
                rain = math.nan
            else:
                rain = _parse_float(raw, "rain_mm", line)
                if rain < 0:
                    raise ParseError(f"negative rainfall {rain}", line)
            key = GridPoint(lat, lon).key()
            series = cells.setdefault(key, {})
            if day in series:
                raise StructuralError(f"duplicate record for point {key} on {day} (line {line})")
            series[day] = rain

    if not cells:
        raise StructuralError("no records")

    all_days = sorted(set().union(*(s.keys() for s in cells.values())))
    for a, b in zip(all_days, all_days[1:]):
        if (b - a).days != 1:
            raise StructuralError(f"dates not contiguous: gap between {a} and {b}")

    keys = sorted(cells)
    values = np.full((len(keys), len(all_days)), np.nan)
    col = {d: j for j, d in enumerate(all_days)}
    for i, key in enumerate(keys):
        for day, rain in cells[key].items():
            values[i, col[day]] = rain
    return DailyRecords(tuple(GridPoint(*k) for k in keys), tuple(all_days), values)


def drop_empty_points(records: DailyRecords) -> DailyRecords:
    """Remove points whose every daily value is missing (e.g. ocean fill cells)."""
    keep = ~np.all(np.isnan(records.values), axis=1)
    if not keep.any():
        raise EmptySelectionError("every point is entirely missing")
    points = tuple(p for p, k in zip(records.points, keep) if k)
    return DailyRecords(points, records.dates, records.values[keep])


def monthly_average(records: DailyRecords, how: str = "mean") -> RainfallGrid:
    """Aggregate daily rainfall to one value per calendar month.

    ``how="mean"`` (the default) gives mm/day; ``how="sum"`` gives the monthly
    total of the non-missing days in mm.
    """
    if how not in ("mean", "sum"):
        raise ValueError(f"how must be 'mean' or 'sum', got {how!r}")
    if not records.dates:
        raise StructuralError("no records")
    day_months = np.array([month_ordinal((d.year, d.month)) for d in records.dates])
    months = month_range(
        (records.dates[0].year, records.dates[0].month),
        (records.dates[-1].year, records.dates[-1].month),
    )
    out = np.empty((len(records.points), len(months)))
    for j, month in enumerate(months):
        block = records.values[:, day_months == month_ordinal(month)]
        present = (~np.isnan(block)).sum(axis=1)
        empty = np.flatnonzero(present == 0)
        if empty.size:
            p = records.points[empty[0]]
            raise MissingDataError(
                f"no non-missing days for point ({p.lat}, {p.lon}) in {format_month(month)}"
            )
        total = np.nansum(block, axis=1)
        out[:, j] = total / present if how == "mean" else total
    return RainfallGrid(records.points, months, out)


def select_region(grid: RainfallGrid, bbox: BoundingBox) -> RainfallGrid:
    keep = [i for i, p in enumerate(grid.points) if bbox.contains(p)]
    if not keep:
        raise EmptySelectionError(f"no grid points inside {bbox}")
    return RainfallGrid(
        tuple(grid.points[i] for i in keep), grid.months, grid.values[keep]
    )


def nearest_point(grid: RainfallGrid, lat: float, lon: float) -> GridPoint:
    coords = np.array([[p.lat, p.lon] for p in grid.points])
    d2 = (coords[:, 0] - lat) ** 2 + (coords[:, 1] - lon) ** 2
    return grid.points[int(np.argmin(d2))]


def select_point(grid: RainfallGrid, lat: float, lon: float) -> np.ndarray:
    """Return the monthly series of the grid point at exactly (lat, lon)."""
    want = GridPoint(lat, lon).key()
    for i, p in enumerate(grid.points):
        if p.key() == want:
            return grid.values[i].copy()
    near = nearest_point(grid, lat, lon)
    raise PointNotFoundError(
        f"no grid point at ({lat}, {lon}); nearest is ({near.lat}, {near.lon})", nearest=near
    )


def write_daily_csv(records: DailyRecords, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DAILY_HEADER)
        for p, row in zip(records.points, records.values):
            for day, v in zip(records.dates, row):
                w.writerow([repr(p.lat), repr(p.lon), day.isoformat(), MISSING if np.isnan(v) else repr(float(v))])


def write_monthly_csv(grid: RainfallGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MONTHLY_HEADER)
        for p, row in zip(grid.points, grid.values):
            for (year, mon), v in zip(grid.months, row):
                w.writerow([repr(p.lat), repr(p.lon), year, mon, repr(float(v))])


def load_monthly_csv(path) -> RainfallGrid:
    cells: dict[tuple[float, float], dict[Month, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MONTHLY_HEADER:
            raise ParseError(f"expected header {','.join(MONTHLY_HEADER)}, got {header}", 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 fields, got {len(row)}", line)
            lat = _parse_float(row[0], "lat", line)
            lon = _parse_float(row[1], "lon", line)
            try:
                month = (int(row[2]), int(row[3]))
            except ValueError:
                raise ParseError(f"invalid year/month {row[2]!r}/{row[3]!r}", line) from None
            if not 1 <= month[1] <= 12:
                raise ParseError(f"month out of range: {month[1]}", line)
            value = _parse_float(row[4], "rain_mm_per_day", line)
            series = cells.setdefault(GridPoint(lat, lon).key(), {})
            if month in series:
                raise StructuralError(f"duplicate record for {lat},{lon} {format_month(month)} (line {line})")
            series[month] = value
    if not cells:
        raise StructuralError("no records")
    all_months = sorted(set().union(*(s.keys() for s in cells.values())))
    months = month_range(all_months[0], all_months[-1])
    keys = sorted(cells)
    values = np.empty((len(keys), len(months)))
    for i, key in enumerate(keys):
        series = cells[key]
        for j, m in enumerate(months):
            if m not in series:
                raise MissingDataError(f"point {key} has no value for {format_month(m)}")
            values[i, j] = series[m]
    return RainfallGrid(tuple(GridPoint(*k) for k in keys), months, values)


def grid_from_series(points: Sequence[GridPoint], first_month: Month, values) -> RainfallGrid:
    """Convenience constructor for in-memory grids."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    last = month_from_ordinal(month_ordinal(first_month) + values.shape[1] - 1)
    return RainfallGrid(tuple(points), month_range(first_month, last), values)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
