"""LSTM regressor: LSTM -> dropout -> dense(1, zero-initialized) -> reshape [1, 1]."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import StructuralError, TrainingError
from ..preprocess import WindowedDataset
from .lstm import (
    DenseParams,
    LstmParams,
    dense_backward,
    dense_forward,
    dropout,
    lstm_backward,
    lstm_forward,
    mae_loss,
)
from .optim import make_optimizer

NO_DECAY = ("lstm.bias", "dense.b")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adamw"
    lr: float = 0.01
    dropout: float = 0.2
    input_width: int = 13
    output_width: int = 1
    hidden: int = 64
    weight_decay: float | None = None  # None: 0.01 for AdamW, 0 for Nadam
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.output_width != 1:
            raise ValueError("the dense head predicts a single month; output_width must be 1")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


class LstmRegressor:
    def __init__(self, lstm: LstmParams, dense: DenseParams, dropout_rate: float = 0.2, input_width=None):
        if not 0 <= dropout_rate < 1:
            raise ValueError(f"dropout rate must lie in [0, 1), got {dropout_rate}")
        if dense.w.shape != (lstm.hidden,):
            raise StructuralError("dense weights do not match the LSTM hidden size")
        self.lstm = lstm
        self.dense = dense
        self.dropout_rate = dropout_rate
        # window length seen in training; checked by predict()
        self.input_width = input_width

    @classmethod
    def initialize(cls, hidden: int = 64, dropout_rate: float = 0.2, seed: int = 0, n_inputs: int = 1):
        rng = np.random.default_rng(seed)
        return cls(LstmParams.glorot(hidden, n_inputs, rng), DenseParams.zeros(hidden), dropout_rate)

    @property
    def hidden(self) -> int:
        return self.lstm.hidden

    @property
    def input_dim(self) -> int:
        return self.lstm.n_inputs

    def parameters(self) -> dict[str, np.ndarray]:
        """Live views of every trainable array, keyed by dotted name."""
        return {
            "lstm.W_x": self.lstm.W_x,
            "lstm.W_h": self.lstm.W_h,
            "lstm.bias": self.lstm.bias,
            "dense.w": self.dense.w,
            "dense.b": self.dense.b,
        }

    def n_parameters(self) -> int:
        return self.lstm.size() + self.dense.size()

    def forward(self, windows, training=False, rng=None):
        """Predictions of shape (B, 1, 1) plus what :meth:`backward` needs."""
        windows = np.asarray(windows, dtype=float)
        if windows.ndim == 2:
            windows = windows[:, :, None]
        h_last, lstm_cache = lstm_forward(self.lstm, windows)
        dropped, mask = dropout(h_last, self.dropout_rate, training, rng)
        y = dense_forward(self.dense, dropped)
        return y, (lstm_cache, dropped, mask)

    def backward(self, cache, dpred) -> dict[str, np.ndarray]:
        """Parameter gradients given dLoss/dPred for each sample of the batch."""
        lstm_cache, dropped, mask = cache
        dense_grads, d_dropped = dense_backward(self.dense, dropped, dpred)
        dh = d_dropped * mask
        if self.dropout_rate:
            dh = dh / (1.0 - self.dropout_rate)
        lstm_grads, _ = lstm_backward(lstm_cache, dh)
        return {
            "lstm.W_x": lstm_grads.W_x,
            "lstm.W_h": lstm_grads.W_h,
            "lstm.bias": lstm_grads.bias,
            "dense.w": dense_grads.w,
            "dense.b": dense_grads.b,
        }

    def predict_batch(self, windows) -> np.ndarray:
        y, _ = self.forward(windows, training=False)
        return y.reshape(-1)

    def copy(self) -> LstmRegressor:
        return LstmRegressor(
            LstmParams(self.lstm.W_x.copy(), self.lstm.W_h.copy(), self.lstm.bias.copy()),
            DenseParams(self.dense.w.copy(), self.dense.b.copy()),
            self.dropout_rate,
            self.input_width,
        )


def train(model: LstmRegressor, data: WindowedDataset, cfg: TrainConfig):
    """Mini-batch BPTT under MAE loss. Updates ``model`` in place.

    Returns ``(model, history)`` where ``history[e]`` is the mean training MAE
    seen during epoch ``e`` (training mode, before each batch's update).
    """
    if len(data) == 0:
        raise ValueError("empty training set")
    if data.output_width != 1:
        raise ValueError("training expects single-month targets")
    model.input_width = data.input_width
    state, step = make_optimizer(cfg.optimizer, lr=cfg.lr, weight_decay=cfg.weight_decay)
    # separate stream from the one used for weight initialization
    rng = np.random.default_rng([cfg.seed, 1])
    params = model.parameters()
    inputs = data.inputs
    targets = data.targets[:, 0]
    n = len(data)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            pred, cache = model.forward(inputs[idx], training=True, rng=rng)
            loss, sign = mae_loss(pred.reshape(-1), targets[idx])
            grads = model.backward(cache, sign / len(idx))
            step(state, params, grads, no_decay=NO_DECAY)
            total += loss * len(idx)
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"loss diverged at epoch {epoch}", epoch)
        history.append(epoch_loss)
    return model, history


def fit_regressor(data: WindowedDataset, cfg: TrainConfig):
    """Initialize a fresh regressor from ``cfg`` and train it."""
    model = LstmRegressor.initialize(cfg.hidden, cfg.dropout, cfg.seed)
    return train(model, data, cfg)


def predict(model: LstmRegressor, window, normalized: bool = True, normalizer=None) -> float:
    """Inference-mode prediction for one input window.

    The result is in normalized units unless ``normalized`` is False, in which
    case ``normalizer`` maps it back to mm/day.
    """
    window = np.asarray(window, dtype=float).reshape(-1)
    if model.input_width is not None and window.size != model.input_width:
        raise StructuralError(f"window has {window.size} months, model expects {model.input_width}")
    y = float(model.predict_batch(window[None, :])[0])
    if normalized:
        return y
    if normalizer is None:
        raise ValueError("a normalizer is required to return mm/day")
    return float(y * normalizer.scale + normalizer.min)


def save_checkpoint(model: LstmRegressor, directory, cfg: TrainConfig | None = None, history=None) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    params = model.parameters()
    np.savez(d / "weights.npz", **params)
    manifest = {
        "shapes": {k: list(v.shape) for k, v in params.items()},
        "dropout": model.dropout_rate,
        "input_width": model.input_width,
        "seed": None if cfg is None else cfg.seed,
        "config": None if cfg is None else asdict(cfg),
        "config_hash": None if cfg is None else cfg.digest(),
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if history is not None:
        write_history(history, d / "loss_history.csv")


def load_checkpoint(directory) -> LstmRegressor:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    with np.load(d / "weights.npz") as w:
        arrays = {k: w[k].copy() for k in w.files}
    for name, shape in manifest["shapes"].items():
        if list(arrays[name].shape) != shape:
            raise StructuralError(f"{name} has shape {arrays[name].shape}, manifest says {shape}")
    return LstmRegressor(
        LstmParams(arrays["lstm.W_x"], arrays["lstm.W_h"], arrays["lstm.bias"]),
        DenseParams(arrays["dense.w"], arrays["dense.b"]),
        manifest["dropout"],
        manifest.get("input_width"),
    )


def write_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for e, loss in enumerate(history):
            w.writerow([e, repr(float(loss))])
