"""Experiment grids for both forecasting pipelines and their CSV outputs."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dmd import clamp_nonnegative, dmd_fit, dmd_forecast
from .errors import InsufficientDataError, RainfallError, RangeError
from .ingest import GridPoint, Month, RainfallGrid, format_month, month_range
from .metrics import evaluate_grid, rmse as rmse_metric
from .nn import TrainConfig, fit_regressor
from .preprocess import build_snapshot_matrix, fit_normalizer, make_windows, normalize, split_train_test

log = logging.getLogger(__name__)

# start year, stop year, projection rank
DEFAULT_DMD_TRIPLES = (
    (1929, 1939, 106),
    (1941, 1951, 123),
    (1954, 1964, 127),
    (1973, 1983, 128),
    (1995, 2005, 118),
    (2000, 2010, 100),
    (2005, 2015, 123),
)

# Approximate city coordinates snapped to the 0.25 degree grid. The exact
# cells used for the published tables are unknown; override as needed.
LOCATION_ALIASES = {
    "agartala": (23.75, 91.25),
    "guwahati": (26.25, 91.75),
    "imphal": (24.75, 94.0),
    "itanagar": (27.0, 93.5),
}

DMD_COLUMNS = ("start", "stop", "rank", "rmse", "mae")
DL_COLUMNS = ("optimizer", "input_window", "output_window", "dropout", "mae", "rmse")


@dataclass
class ExperimentResult:
    config: dict
    mae: float = float("nan")
    rmse: float = float("nan")
    runtime: float = 0.0
    seed: int | None = None
    units: str = "mm/day"
    error: str | None = None
    # evaluation-period data behind the metrics, kept for plot emission
    months: tuple = ()
    points: tuple = ()
    truth: np.ndarray | None = field(default=None, repr=False)
    prediction: np.ndarray | None = field(default=None, repr=False)
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class DmdExperimentSpec:
    triples: Sequence[tuple[int, int, int]] = DEFAULT_DMD_TRIPLES
    horizon: int = 12

    def infeasible(self) -> list[tuple[int, int, int]]:
        """Triples whose rank exceeds 12 * years - 1; these fail at run time."""
        return [(a, b, r) for a, b, r in self.triples if r > 12 * (b - a + 1) - 1]


def _dmd_cell(grid: RainfallGrid, start: int, stop: int, rank: int, horizon: int) -> ExperimentResult:
    config = {"start": start, "stop": stop, "rank": rank}
    t0 = time.perf_counter()
    try:
        X = build_snapshot_matrix(grid, start, stop)
        first = (stop + 1, 1)
        months = month_range(first, _add_months(first, horizon - 1))
        try:
            lo, hi = grid.month_index(months[0]), grid.month_index(months[-1])
        except KeyError:
            raise RangeError(f"no held-out data for {format_month(months[0])}..{format_month(months[-1])}") from None
        truth = grid.values[:, lo : hi + 1]
        model = dmd_fit(X, rank)
        pred = clamp_nonnegative(dmd_forecast(model, horizon))
        report = evaluate_grid(truth, pred, units="mm/day")
    except (RainfallError, ValueError) as exc:
        log.warning("DMD %s-%s rank %s failed: %s", start, stop, rank, exc)
        return ExperimentResult(config, runtime=time.perf_counter() - t0, error=str(exc))
    return ExperimentResult(
        config,
        mae=report.mae,
        rmse=report.rmse,
        runtime=time.perf_counter() - t0,
        units=report.units,
        months=months,
        points=grid.points,
        truth=truth,
        prediction=pred,
    )


def _add_months(month: Month, k: int) -> Month:
    y, m = month
    total = y * 12 + m - 1 + k
    return (total // 12, total % 12 + 1)


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, *zip(*jobs)))
    return [fn(*job) for job in jobs]


def run_dmd_experiments(grid: RainfallGrid, spec: DmdExperimentSpec, workers: int = 1) -> list[ExperimentResult]:
    """One row per (start, stop, rank) triple, in the order given.

    A triple that fails (coverage gap, bad rank, ...) yields a row with
    ``error`` set; the others still run.
    """
    jobs = [(grid, start, stop, rank, spec.horizon) for start, stop, rank in spec.triples]
    return _map(_dmd_cell, jobs, workers)


@dataclass(frozen=True)
class DlExperimentSpec:
    location: tuple[float, float] | None = None
    optimizers: Sequence[str] = ("adamw", "nadam")
    input_windows: Sequence[int] = (13, 14, 15)
    output_window: int = 1
    dropouts: Sequence[float] = (0.0, 0.2)
    train: TrainConfig = TrainConfig()
    seed: int = 0
    train_fraction: float = 0.8

    def cells(self) -> list[TrainConfig]:
        return [
            replace(self.train, optimizer=opt, input_width=w, output_width=self.output_window, dropout=d, seed=self.seed)
            for opt, w, d in itertools.product(self.optimizers, self.input_windows, self.dropouts)
        ]


def _dl_cell(series: np.ndarray, months, cfg: TrainConfig, train_fraction: float) -> ExperimentResult:
    config = {
        "optimizer": cfg.optimizer,
        "input_window": cfg.input_width,
        "output_window": cfg.output_width,
        "dropout": cfg.dropout,
    }
    t0 = time.perf_counter()
    norm = fit_normalizer(series, train_fraction)
    windows = make_windows(normalize(norm, series), cfg.input_width, cfg.output_width)
    train_set, test_set = split_train_test(windows, train_fraction)
    model, history = fit_regressor(train_set, cfg)
    pred = model.predict_batch(test_set.inputs)
    truth = test_set.targets[:, 0]
    report = evaluate_grid(truth, pred, units="normalized")
    baseline = np.full_like(truth, train_set.targets[:, 0].mean())
    return ExperimentResult(
        config,
        mae=report.mae,
        rmse=report.rmse,
        runtime=time.perf_counter() - t0,
        seed=cfg.seed,
        units="normalized",
        months=tuple(months[i] for i in test_set.target_start) if months is not None else tuple(test_set.target_start),
        truth=truth,
        prediction=pred,
        extras={
            "baseline_rmse": rmse_metric(truth, baseline),
            "final_train_loss": history[-1],
            "normalizer": (norm.min, norm.max),
            "config_hash": cfg.digest(),
        },
    )


def run_dl_experiments(series, spec: DlExperimentSpec, months=None, workers: int = 1) -> list[ExperimentResult]:
    """Train and score one model per grid cell on a single location's series.

    Metrics are in normalized units. Cells come back in grid order
    (optimizer, then input window, then dropout).
    """
    series = np.asarray(series, dtype=float)
    need = max(spec.input_windows) + spec.output_window + 5
    if len(series) < need:
        raise InsufficientDataError(f"series has {len(series)} months, grid needs at least {need}")
    if months is not None and len(months) != len(series):
        raise ValueError("months and series lengths differ")
    jobs = [(series, months, cfg, spec.train_fraction) for cfg in spec.cells()]
    return _map(_dl_cell, jobs, workers)


def flag_best(results: Sequence[ExperimentResult]) -> dict[str, int]:
    """Indices of the argmin-MAE and argmin-RMSE rows (first wins on ties)."""
    ok = [i for i, r in enumerate(results) if r.ok]
    if not ok:
        return {}
    return {
        "mae": min(ok, key=lambda i: results[i].mae),
        "rmse": min(ok, key=lambda i: results[i].rmse),
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def write_table(results: Sequence[ExperimentResult], path, columns: Sequence[str]) -> None:
    """Successful rows only, full float precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in results:
            if not r.ok:
                continue
            row = {**r.config, "mae": float(r.mae), "rmse": float(r.rmse)}
            w.writerow([_fmt(row[c]) for c in columns])


def write_errors(results: Sequence[ExperimentResult], path) -> int:
    failed = [r for r in results if not r.ok]
    if not failed:
        return 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "error"])
        for r in failed:
            w.writerow([json.dumps(r.config, sort_keys=True), r.error])
    return len(failed)


def write_best(results: Sequence[ExperimentResult], path, columns: Sequence[str]) -> None:
    best = flag_best(results)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", *columns])
        for crit, i in best.items():
            r = results[i]
            row = {**r.config, "mae": float(r.mae), "rmse": float(r.rmse)}
            w.writerow([crit, *(_fmt(row[c]) for c in columns)])


def _month_label(m) -> str:
    return format_month(m) if isinstance(m, tuple) else str(m)


def _write_series(path, months, truth, pred) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["month", "truth", "prediction"])
        for m, t, p in zip(months, truth, pred):
            w.writerow([_month_label(m), repr(float(t)), repr(float(p))])


def _point_name(p: GridPoint) -> str:
    return f"{p.lat:g}_{p.lon:g}"


def emit_plot_data(results: Sequence[ExperimentResult], out_dir, location: str | None = None) -> list[Path]:
    """Write ``month,truth,prediction`` CSVs behind each successful result.

    DMD rows produce one file per grid point under ``dmd_<start>_<stop>_r<rank>/``.
    LSTM rows produce one file per cell under ``<location>/``. A ``summary.csv``
    mirroring the result table is written alongside.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    dl_rows = []
    dmd_rows = []
    for r in results:
        if not r.ok:
            continue
        if "rank" in r.config:
            dmd_rows.append(r)
            c = r.config
            sub = out / f"dmd_{c['start']}_{c['stop']}_r{c['rank']}"
            sub.mkdir(exist_ok=True)
            for i, p in enumerate(r.points):
                path = sub / f"{_point_name(p)}.csv"
                _write_series(path, r.months, r.truth[i], r.prediction[i])
                written.append(path)
        else:
            dl_rows.append(r)
            c = r.config
            sub = out / (location or "location")
            sub.mkdir(exist_ok=True)
            path = sub / f"dl_{c['optimizer']}_w{c['input_window']}_h{c['output_window']}_d{c['dropout']:g}.csv"
            _write_series(path, r.months, r.truth, r.prediction)
            written.append(path)
    if dmd_rows:
        write_table(dmd_rows, out / "summary.csv", DMD_COLUMNS)
        written.append(out / "summary.csv")
    if dl_rows:
        path = out / ("summary.csv" if not dmd_rows else "summary_dl.csv")
        write_table(dl_rows, path, DL_COLUMNS)
        written.append(path)
    return written


def write_manifest(path, *, command: str, config: dict, seed, data_hash: str | None, results) -> None:
    """Run metadata. Runtimes live here, not in the result tables, so tables stay byte-stable."""
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "data_sha256": data_hash,
        "rows": [
            {"config": r.config, "runtime_s": round(r.runtime, 3), "error": r.error, **_jsonable(r.extras)}
            for r in results
        ],
    }
    Path(path).write_text(json.dumps(manifest, indent=2, default=_default) + "\n")


def _jsonable(d):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(type(o))
