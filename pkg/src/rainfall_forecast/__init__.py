"""Monthly rainfall forecasting with exact DMD over a spatial grid and a
per-location LSTM regressor."""

from .dmd import DmdModel, dmd_fit, dmd_forecast, dmd_reconstruct, rank_by_energy, truncated_svd
from .ingest import GridPoint, RainfallGrid, load_daily_csv, load_monthly_csv, monthly_average
from .metrics import evaluate_grid, mae, rmse

__version__ = "0.1.0"

__all__ = [
    "DmdModel",
    "GridPoint",
    "RainfallGrid",
    "dmd_fit",
    "dmd_forecast",
    "dmd_reconstruct",
    "evaluate_grid",
    "load_daily_csv",
    "load_monthly_csv",
    "mae",
    "monthly_average",
    "rank_by_energy",
    "rmse",
    "truncated_svd",
]
