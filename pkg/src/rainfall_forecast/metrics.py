"""RMSE and MAE shared by the DMD and LSTM pipelines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError


def _residual(y, y_hat) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise StructuralError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise StructuralError("cannot score empty inputs")
    return (y - y_hat).ravel()


def rmse(y, y_hat) -> float:
    r = _residual(y, y_hat)
    return float(np.sqrt(np.mean(r * r)))


def mae(y, y_hat) -> float:
    return float(np.mean(np.abs(_residual(y, y_hat))))


@dataclass(frozen=True)
class EvalReport:
    rmse: float
    mae: float
    n: int
    units: str  # "mm/day" or "normalized"


def evaluate_grid(truth, pred, units: str = "mm/day") -> EvalReport:
    """Score every (location, month) entry pooled together."""
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.shape != pred.shape:
        raise StructuralError(f"shape mismatch: {truth.shape} vs {pred.shape}")
    return EvalReport(rmse(truth, pred), mae(truth, pred), truth.size, units)
