"""Single-layer LSTM, inverted dropout, dense head and MAE loss in plain numpy.

All routines are batched over a leading axis. Gate blocks are stacked in the
order input, forget, cell candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import NumericError, StructuralError

GATES = ("i", "f", "g", "o")


@dataclass
class LstmParams:
    W_x: np.ndarray  # (4h, d)
    W_h: np.ndarray  # (4h, h)
    bias: np.ndarray  # (4h,)

    @property
    def hidden(self) -> int:
        return self.W_h.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.W_x.shape[1]

    @classmethod
    def zeros(cls, hidden: int, n_inputs: int = 1) -> LstmParams:
        return cls(
            np.zeros((4 * hidden, n_inputs)), np.zeros((4 * hidden, hidden)), np.zeros(4 * hidden)
        )

    @classmethod
    def glorot(cls, hidden: int, n_inputs: int, rng: np.random.Generator) -> LstmParams:
        """Glorot-uniform weights, zero biases."""

        def uniform(shape):
            fan_out, fan_in = shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=shape)

        return cls(uniform((4 * hidden, n_inputs)), uniform((4 * hidden, hidden)), np.zeros(4 * hidden))

    def size(self) -> int:
        return self.W_x.size + self.W_h.size + self.bias.size


@dataclass
class LstmCache:
    x: np.ndarray  # (B, T, d)
    h: np.ndarray  # (B, T+1, h), h[:, 0] = h0
    c: np.ndarray  # (B, T+1, h)
    gates: np.ndarray  # (B, T, 4h) post-activation
    tanh_c: np.ndarray  # (B, T, h)
    params: LstmParams


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :, None]
    if x.ndim == 2:
        return x[None]
    if x.ndim == 3:
        return x
    raise StructuralError(f"expected a (T,), (T, d) or (B, T, d) input, got shape {x.shape}")


def lstm_forward(params: LstmParams, x, h0=None, c0=None):
    """Run the recurrence over a window.

    ``x`` is (T,), (T, d) or (B, T, d). Returns the final hidden state with
    shape (B, h) and the cache needed by :func:`lstm_backward`.
    """
    x = _as_batch(x)
    B, T, d = x.shape
    if d != params.n_inputs:
        raise StructuralError(f"input has {d} features, parameters expect {params.n_inputs}")
    nh = params.hidden
    h = np.zeros((B, T + 1, nh))
    c = np.zeros((B, T + 1, nh))
    if h0 is not None:
        h[:, 0] = h0
    if c0 is not None:
        c[:, 0] = c0
    gates = np.empty((B, T, 4 * nh))
    tanh_c = np.empty((B, T, nh))

    # input projection for every step at once
    xw = x @ params.W_x.T + params.bias
    for t in range(T):
        z = xw[:, t] + h[:, t] @ params.W_h.T
        a = gates[:, t]
        a[:, : 2 * nh] = expit(z[:, : 2 * nh])
        a[:, 2 * nh : 3 * nh] = np.tanh(z[:, 2 * nh : 3 * nh])
        a[:, 3 * nh :] = expit(z[:, 3 * nh :])
        i, f, g, o = np.split(a, 4, axis=1)
        c[:, t + 1] = f * c[:, t] + i * g
        tanh_c[:, t] = np.tanh(c[:, t + 1])
        h[:, t + 1] = o * tanh_c[:, t]
        if not (np.isfinite(c[:, t + 1]).all() and np.isfinite(h[:, t + 1]).all()):
            raise NumericError(f"non-finite LSTM state at step {t}")
    return h[:, T], LstmCache(x, h, c, gates, tanh_c, params)


def lstm_backward(cache: LstmCache, dh_last, dc_last=None):
    """Backpropagation through time from the gradient of the final hidden state.

    Returns ``(grads, dx)`` where ``grads`` is an :class:`LstmParams` holding
    the parameter gradients (summed over the batch) and ``dx`` has the shape of
    the batched input.
    """
    p = cache.params
    B, T, _ = cache.x.shape
    nh = p.hidden
    dh_last = np.asarray(dh_last, dtype=float)
    if dh_last.shape != (B, nh):
        raise StructuralError(f"upstream gradient shape {dh_last.shape} does not match cache ({B}, {nh})")

    dW_x = np.zeros_like(p.W_x)
    dW_h = np.zeros_like(p.W_h)
    dbias = np.zeros_like(p.bias)
    dx = np.zeros_like(cache.x)
    dh = dh_last.copy()
    dc = np.zeros((B, nh)) if dc_last is None else np.array(dc_last, dtype=float)
    dz = np.empty((B, 4 * nh))
    for t in reversed(range(T)):
        i, f, g, o = np.split(cache.gates[:, t], 4, axis=1)
        tc = cache.tanh_c[:, t]
        dc = dc + dh * o * (1.0 - tc * tc)
        dz[:, :nh] = dc * g * i * (1.0 - i)
        dz[:, nh : 2 * nh] = dc * cache.c[:, t] * f * (1.0 - f)
        dz[:, 2 * nh : 3 * nh] = dc * i * (1.0 - g * g)
        dz[:, 3 * nh :] = dh * tc * o * (1.0 - o)
        dW_x += dz.T @ cache.x[:, t]
        dW_h += dz.T @ cache.h[:, t]
        dbias += dz.sum(axis=0)
        dx[:, t] = dz @ p.W_x
        dh = dz @ p.W_h
        dc = dc * f
    return LstmParams(dW_x, dW_h, dbias), dx


def dropout(x, rate: float, training: bool, rng: np.random.Generator | None = None):
    """Inverted dropout. Returns ``(output, mask)`` with a 0/1 mask."""
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    x = np.asarray(x, dtype=float)
    if not training or rate == 0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= rate).astype(float)
    return x * mask / (1.0 - rate), mask


@dataclass
class DenseParams:
    w: np.ndarray  # (h,)
    b: np.ndarray  # shape () scalar array, kept as ndarray for in-place updates

    @classmethod
    def zeros(cls, hidden: int) -> DenseParams:
        return cls(np.zeros(hidden), np.zeros(()))

    def size(self) -> int:
        return self.w.size + 1


def dense_forward(params: DenseParams, x) -> np.ndarray:
    """y = w.x + b, returned with shape (B, 1, 1); a single vector gives (1, 1)."""
    x = np.asarray(x, dtype=float)
    y = x @ params.w + params.b
    if x.ndim == 1:
        return np.reshape(y, (1, 1))
    return y.reshape(-1, 1, 1)


def dense_backward(params: DenseParams, x, dy):
    """Gradients for a batch: returns ``(DenseParams grads, dx)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dy = np.asarray(dy, dtype=float).reshape(-1)
    return DenseParams(dy @ x, np.asarray(dy.sum())), np.outer(dy, params.w)


def mae_loss(pred, target):
    """Mean absolute error and the per-sample subgradient sign(pred - target).

    The returned gradient is of each sample's own |pred - target| term; divide
    by the batch size to differentiate the mean. sign(0) is taken as 0.
    """
    diff = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    return float(np.mean(np.abs(diff))), np.sign(diff)
