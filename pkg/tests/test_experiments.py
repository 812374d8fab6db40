import csv
import math

import numpy as np
import pytest

from rainfall_forecast import experiments as ex
from rainfall_forecast.errors import InsufficientDataError
from rainfall_forecast.ingest import GridPoint
from rainfall_forecast.metrics import mae, rmse
from rainfall_forecast.nn import TrainConfig
from rainfall_forecast.synth import LinearSystemSpec, SeasonalSpec, gen_linear_system, gen_seasonal, linear_grid

LAM = [np.exp(1j * np.pi / 6), np.exp(-1j * np.pi / 6), 0.98]


@pytest.fixture(scope="module")
def linear_source():
    sys_ = gen_linear_system(LinearSystemSpec(n=8, eigenvalues=LAM, m=12 * 30, seed=1))
    return linear_grid(sys_, (2000, 1))


def test_dmd_linear_source_is_exact(linear_source):
    # three dynamic modes plus the constant offset
    spec = ex.DmdExperimentSpec(triples=[(2001, 2010, 4), (2005, 2015, 4), (2010, 2020, 4)])
    results = ex.run_dmd_experiments(linear_source, spec)
    assert [r.config for r in results] == [{"start": a, "stop": b, "rank": r} for a, b, r in spec.triples]
    for r in results:
        assert r.ok and r.rmse < 1e-6 and r.mae <= r.rmse
        assert r.truth.shape == (8, 12) and r.months[0] == (r.config["stop"] + 1, 1)


def test_dmd_error_isolation(linear_source):
    spec = ex.DmdExperimentSpec(triples=[(2001, 2010, 4), (2020, 2029, 4), (2001, 2001, 40), (2005, 2015, 4)])
    results = ex.run_dmd_experiments(linear_source, spec)
    assert [r.ok for r in results] == [True, False, False, True]
    assert "held-out" in results[1].error
    assert "rank" in results[2].error
    assert spec.infeasible() == [(2001, 2001, 40)]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_dmd_plot_data_recomputes_metrics(tmp_path, linear_source):
    spec = ex.DmdExperimentSpec(triples=[(2001, 2010, 3)])
    results = ex.run_dmd_experiments(linear_source, spec)
    paths = ex.emit_plot_data(results, tmp_path)
    per_point = [p for p in paths if p.parent.name == "dmd_2001_2010_r3"]
    assert len(per_point) == 8
    truth, pred = [], []
    for p in per_point:
        rows = read_csv(p)
        assert len(rows) == 12 and rows[0]["month"] == "2011-01"
        truth += [float(r["truth"]) for r in rows]
        pred += [float(r["prediction"]) for r in rows]
    assert abs(rmse(truth, pred) - results[0].rmse) <= 1e-12
    assert abs(mae(truth, pred) - results[0].mae) <= 1e-12
    summary = read_csv(tmp_path / "summary.csv")
    assert list(summary[0]) == list(ex.DMD_COLUMNS)
    assert float(summary[0]["rmse"]) == results[0].rmse


def test_dmd_parallel_matches_serial(linear_source):
    spec = ex.DmdExperimentSpec(triples=[(2001, 2010, 4), (2005, 2015, 3)])
    a = ex.run_dmd_experiments(linear_source, spec)
    b = ex.run_dmd_experiments(linear_source, spec, workers=2)
    assert [(r.rmse, r.mae) for r in a] == [(r.rmse, r.mae) for r in b]


SMALL = TrainConfig(epochs=3, hidden=8, batch_size=16)


@pytest.fixture(scope="module")
def seasonal_series():
    return gen_seasonal(SeasonalSpec(amplitude=10.0, length=120, noise=0.5, seed=2))


@pytest.fixture(scope="module")
def small_grid_results(seasonal_series):
    spec = ex.DlExperimentSpec(train=SMALL, seed=4)
    return ex.run_dl_experiments(seasonal_series, spec)


def test_dl_grid_shape_and_order(small_grid_results):
    configs = [(r.config["optimizer"], r.config["input_window"], r.config["dropout"]) for r in small_grid_results]
    assert configs == [(o, w, d) for o in ("adamw", "nadam") for w in (13, 14, 15) for d in (0.0, 0.2)]
    for r in small_grid_results:
        assert r.units == "normalized" and r.seed == 4
        assert r.config["output_window"] == 1
        assert math.isfinite(r.mae) and r.rmse >= r.mae
        assert "baseline_rmse" in r.extras


def test_dl_test_split_lengths(small_grid_results, seasonal_series):
    for r in small_grid_results:
        n = len(seasonal_series) - r.config["input_window"]
        n_train = int(np.floor(0.8 * n + 1e-9))
        assert len(r.truth) == n - n_train


def test_flag_best(small_grid_results):
    best = ex.flag_best(small_grid_results)
    assert small_grid_results[best["mae"]].mae == min(r.mae for r in small_grid_results)
    assert small_grid_results[best["rmse"]].rmse == min(r.rmse for r in small_grid_results)
    assert ex.flag_best([]) == {}


def test_dl_insufficient_data():
    with pytest.raises(InsufficientDataError):
        ex.run_dl_experiments(np.arange(20.0), ex.DlExperimentSpec(train=SMALL))


def test_dl_tables_deterministic(tmp_path, seasonal_series):
    spec = ex.DlExperimentSpec(train=SMALL, seed=4, optimizers=["nadam"], input_windows=[13])
    outputs = []
    for run in ("a", "b"):
        results = ex.run_dl_experiments(seasonal_series, spec)
        ex.write_table(results, tmp_path / f"{run}.csv", ex.DL_COLUMNS)
        ex.emit_plot_data(results, tmp_path / f"plots_{run}", location="test")
        files = sorted((tmp_path / f"plots_{run}").rglob("*.csv"))
        outputs.append([(tmp_path / f"{run}.csv").read_bytes()] + [f.read_bytes() for f in files])
    assert outputs[0] == outputs[1]


def test_dl_plot_rows_recompute(tmp_path, small_grid_results):
    ex.emit_plot_data(small_grid_results, tmp_path, location="x")
    for r in small_grid_results:
        c = r.config
        path = tmp_path / "x" / f"dl_{c['optimizer']}_w{c['input_window']}_h1_d{c['dropout']:g}.csv"
        rows = read_csv(path)
        assert len(rows) == len(r.truth)
        t = [float(row["truth"]) for row in rows]
        p = [float(row["prediction"]) for row in rows]
        assert abs(mae(t, p) - r.mae) <= 1e-12 and abs(rmse(t, p) - r.rmse) <= 1e-12
    header = (tmp_path / "summary.csv").read_text().splitlines()[0]
    assert header == ",".join(ex.DL_COLUMNS)


def test_write_best_and_errors(tmp_path, small_grid_results):
    ex.write_best(small_grid_results, tmp_path / "best.csv", ex.DL_COLUMNS)
    rows = read_csv(tmp_path / "best.csv")
    assert [r["criterion"] for r in rows] == ["mae", "rmse"]
    failed = [ex.ExperimentResult({"start": 1, "stop": 2, "rank": 3}, error="boom")]
    assert ex.write_errors(failed, tmp_path / "errors.csv") == 1
    assert ex.write_errors(small_grid_results, tmp_path / "none.csv") == 0


def test_default_triples_ranks_feasible_under_inclusive_years():
    assert ex.DmdExperimentSpec().infeasible() == []
    for start, stop, rank in ex.DEFAULT_DMD_TRIPLES:
        assert stop - start == 10
        assert rank <= 12 * (stop - start + 1) - 1


def test_location_aliases_on_quarter_degree_grid():
    for lat, lon in ex.LOCATION_ALIASES.values():
        assert (lat * 4).is_integer() and (lon * 4).is_integer()
        assert GridPoint(lat, lon).key() == (lat, lon)
