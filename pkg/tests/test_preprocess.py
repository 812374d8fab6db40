import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rainfall_forecast.errors import DegenerateScaleError, InsufficientDataError, RangeError, SplitError
from rainfall_forecast.ingest import GridPoint, grid_from_series
from rainfall_forecast.preprocess import (
    Normalizer,
    SnapshotMatrix,
    build_snapshot_matrix,
    denormalize,
    fit_normalizer,
    make_windows,
    normalize,
    split_train_test,
)


@pytest.fixture
def grid():
    points = [GridPoint(25.0 + 0.25 * i, 91.0) for i in range(5)]
    values = np.arange(5 * 12 * 20, dtype=float).reshape(5, 240)
    return grid_from_series(points, (1940, 1), values)


def test_snapshot_inclusive_years(grid):
    X = build_snapshot_matrix(grid, 1945, 1955)
    assert X.shape == (5, 132)
    assert X.months[0] == (1945, 1) and X.months[-1] == (1955, 12)
    np.testing.assert_array_equal(X.data[:, 0], grid.values[:, 60])


def test_snapshot_single_year(grid):
    assert build_snapshot_matrix(grid, 1950, 1950).shape == (5, 12)


def test_snapshot_inverted_range(grid):
    with pytest.raises(RangeError):
        build_snapshot_matrix(grid, 1955, 1945)


def test_snapshot_outside_coverage(grid):
    with pytest.raises(RangeError):
        build_snapshot_matrix(grid, 1955, 1960)


def test_snapshot_csv(tmp_path, grid):
    X = build_snapshot_matrix(grid, 1950, 1950)
    X.to_csv(tmp_path / "x.csv")
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines[0].startswith("lat:lon,1950-01,1950-02")
    assert lines[1].startswith("25:91,")
    assert len(lines) == 6


def test_snapshot_needs_two_columns():
    with pytest.raises(Exception):
        SnapshotMatrix(np.ones((3, 1)), ((2000, 1),))


def test_fit_uses_prefix_only():
    norm = fit_normalizer([0, 5, 10, 100], 0.75)
    assert (norm.min, norm.max) == (0, 10)


def test_fit_full_series():
    norm = fit_normalizer(np.arange(11.0), 1.0)
    assert (norm.min, norm.max) == (0, 10)


def test_fit_constant_prefix():
    with pytest.raises(DegenerateScaleError):
        fit_normalizer([2, 2, 2, 2, 9], 0.8)


def test_normalize_values():
    norm = Normalizer(0, 10)
    np.testing.assert_array_equal(normalize(norm, [0, 5, 10]), [0.0, 0.5, 1.0])
    assert normalize(norm, [20])[0] == 2.0


def test_denormalize_values():
    norm = Normalizer(2, 4)
    np.testing.assert_array_equal(denormalize(norm, [0.5, 0.0, 1.0]), [3.0, 2.0, 4.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-50, 500, size=40)
    norm = fit_normalizer(x, 0.8)
    assert np.max(np.abs(denormalize(norm, normalize(norm, x)) - x)) <= 1e-12 * max(1.0, np.abs(x).max())


def test_refit_idempotent():
    x = np.random.default_rng(1).uniform(size=30)
    assert fit_normalizer(x, 0.8) == fit_normalizer(x, 0.8)


def test_windows_enumerated():
    x = np.array([1.0, 2, 3, 4, 5])
    ds = make_windows(x, 2, 1)
    assert len(ds) == 3
    np.testing.assert_array_equal(ds.inputs, [[1, 2], [2, 3], [3, 4]])
    np.testing.assert_array_equal(ds.targets, [[3], [4], [5]])
    np.testing.assert_array_equal(ds.target_start, [2, 3, 4])


def test_windows_boundary():
    assert len(make_windows(np.arange(14.0), 13, 1)) == 1
    with pytest.raises(InsufficientDataError):
        make_windows(np.arange(13.0), 13, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.integers(1, 10), st.integers(1, 4))
def test_window_properties(L, W, H):
    x = np.arange(L, dtype=float) * 1.5
    if L < W + H:
        with pytest.raises(InsufficientDataError):
            make_windows(x, W, H)
        return
    ds = make_windows(x, W, H)
    assert len(ds) == L - W - H + 1
    # each input ends right before its targets start; stride 1
    for i in range(len(ds)):
        assert ds.inputs[i, -1] == x[ds.target_start[i] - 1]
        assert ds.targets[i, 0] == x[ds.target_start[i]]
    assert np.all(np.diff(ds.target_start) == 1)
    # first target of every sample, followed by the last sample's tail, is series[W:]
    rebuilt = np.concatenate([ds.targets[:, 0], ds.targets[-1, 1:]])
    np.testing.assert_array_equal(rebuilt, x[W:])


def test_split_sizes():
    ds = make_windows(np.arange(12.0), 2, 1)
    assert len(ds) == 10
    train, test = split_train_test(ds, 0.8)
    assert (len(train), len(test)) == (8, 2)
    ds2 = make_windows(np.arange(4.0), 2, 1)
    train, test = split_train_test(ds2, 0.5)
    assert (len(train), len(test)) == (1, 1)


def test_split_empty_side():
    with pytest.raises(SplitError):
        split_train_test(make_windows(np.arange(3.0), 2, 1), 0.8)


@settings(max_examples=60, deadline=None)
@given(st.integers(10, 120), st.integers(1, 6), st.integers(1, 3), st.floats(0.3, 0.9))
def test_split_no_leakage(L, W, H, frac):
    ds = make_windows(np.arange(L, dtype=float), W, H)
    try:
        train, test = split_train_test(ds, frac)
    except SplitError:
        return
    max_train_index = int(train.target_start.max()) + H - 1
    assert max_train_index < int(test.target_start.min())
    assert train.target_start.max() < test.target_start.min()
