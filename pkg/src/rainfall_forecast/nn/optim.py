"""AdamW and Nadam on dictionaries of numpy parameters.

Both keep the usual bias-corrected moments::

    m <- b1 m + (1 - b1) g        m_hat = m / (1 - b1^t)
    v <- b2 v + (1 - b2) g^2      v_hat = v / (1 - b2^t)

AdamW steps by lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta) for parameters
that take weight decay. Nadam replaces m_hat in the numerator with the
Nesterov look-ahead b1 m_hat + (1 - b1) g / (1 - b1^t) and does no decay.
Parameters are updated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import NumericError, StructuralError


@dataclass
class OptimizerState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def _moments(state: OptimizerState, params, grads):
    if set(params) != set(grads):
        raise StructuralError(f"parameter/gradient keys differ: {sorted(params)} vs {sorted(grads)}")
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise StructuralError(f"gradient for {name!r} has shape {grads[name].shape}, expected {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p, dtype=float)
            state.v[name] = np.zeros_like(p, dtype=float)
    state.t += 1
    for name, g in grads.items():
        state.m[name] = state.beta1 * state.m[name] + (1 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1 - state.beta2) * g * g


def _apply(params, name, update):
    if not np.all(np.isfinite(update)):
        raise NumericError(f"non-finite update for parameter {name!r}")
    params[name] -= update


def adamw_step(state: OptimizerState, params: Mapping[str, np.ndarray], grads, no_decay=()):
    """One AdamW step; names listed in ``no_decay`` skip weight decay."""
    _moments(state, params, grads)
    bc1 = 1 - state.beta1**state.t
    bc2 = 1 - state.beta2**state.t
    for name, p in params.items():
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        update = m_hat / (np.sqrt(v_hat) + state.eps)
        if state.weight_decay and name not in no_decay:
            update = update + state.weight_decay * p
        _apply(params, name, state.lr * update)
    return params


def nadam_step(state: OptimizerState, params: Mapping[str, np.ndarray], grads, no_decay=()):
    _moments(state, params, grads)
    bc1 = 1 - state.beta1**state.t
    bc2 = 1 - state.beta2**state.t
    for name, g in grads.items():
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        lookahead = state.beta1 * m_hat + (1 - state.beta1) * g / bc1
        _apply(params, name, state.lr * lookahead / (np.sqrt(v_hat) + state.eps))
    return params


STEPS = {"adamw": adamw_step, "nadam": nadam_step}


def make_optimizer(kind: str, lr: float = 0.01, weight_decay: float | None = None, **kw):
    """Return ``(state, step_fn)`` for ``kind`` in {"adamw", "nadam"}."""
    kind = kind.lower()
    if kind not in STEPS:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {sorted(STEPS)}")
    if weight_decay is None:
        weight_decay = 0.01 if kind == "adamw" else 0.0
    return OptimizerState(lr=lr, weight_decay=weight_decay, **kw), STEPS[kind]
