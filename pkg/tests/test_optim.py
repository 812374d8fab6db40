import math

import numpy as np
import pytest

from rainfall_forecast.errors import NumericError, StructuralError
from rainfall_forecast.nn import OptimizerState, adamw_step, make_optimizer, nadam_step


def one(theta):
    return {"w": np.array([float(theta)])}


def test_adamw_first_step_hand_value():
    # m = 0.1, v = 0.001, m_hat = v_hat = 1 -> step 0.01 / (1 + 1e-8)
    params = one(1.0)
    adamw_step(OptimizerState(lr=0.01), params, one(1.0))
    assert params["w"][0] == pytest.approx(0.9900000001, abs=1e-15)


def test_adamw_zero_gradient_no_decay():
    params = one(1.0)
    adamw_step(OptimizerState(lr=0.01), params, one(0.0))
    assert params["w"][0] == 1.0


def test_adamw_decay_only():
    params = one(1.0)
    adamw_step(OptimizerState(lr=0.01, weight_decay=0.1), params, one(0.0))
    assert params["w"][0] == pytest.approx(0.999, abs=1e-15)


def test_adamw_no_decay_names():
    params = {"w": np.array([1.0]), "b": np.array([1.0])}
    adamw_step(OptimizerState(lr=0.01, weight_decay=0.1), params, {"w": np.zeros(1), "b": np.zeros(1)}, no_decay=("b",))
    assert params["b"][0] == 1.0 and params["w"][0] < 1.0


def test_nadam_first_step_hand_value():
    # look-ahead numerator 0.9 * 1 + 0.1 * 1 / 0.1 = 1.9
    params = one(1.0)
    nadam_step(OptimizerState(lr=0.01), params, one(1.0))
    assert params["w"][0] == pytest.approx(0.98100000019, abs=1e-15)


def test_nadam_zero_gradient():
    params = one(1.0)
    nadam_step(OptimizerState(lr=0.01, weight_decay=0.5), params, one(0.0))
    assert params["w"][0] == 1.0


def scalar_nadam(theta, grads, lr=0.01, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        theta = theta - lr * (b1 * m_hat + (1 - b1) * g / (1 - b1**t)) / (math.sqrt(v_hat) + eps)
    return theta


def test_nadam_two_steps_against_scalar():
    params = one(0.7)
    state = OptimizerState(lr=0.01)
    for _ in range(2):
        nadam_step(state, params, one(0.3))
    assert abs(params["w"][0] - scalar_nadam(0.7, [0.3, 0.3])) <= 1e-12


def test_state_counter_and_shapes():
    state = OptimizerState()
    params = {"a": np.ones((2, 3)), "b": np.ones(4)}
    grads = {"a": np.ones((2, 3)), "b": np.ones(4)}
    for k in range(3):
        adamw_step(state, params, grads)
        assert state.t == k + 1
    assert state.m["a"].shape == (2, 3) and state.v["b"].shape == (4,)


def test_mismatched_gradients():
    with pytest.raises(StructuralError):
        adamw_step(OptimizerState(), {"a": np.ones(2)}, {"a": np.ones(3)})
    with pytest.raises(StructuralError):
        nadam_step(OptimizerState(), {"a": np.ones(2)}, {"b": np.ones(2)})


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_update():
    with pytest.raises(NumericError):
        adamw_step(OptimizerState(), one(1.0), one(np.inf))


def test_make_optimizer_defaults():
    state, step = make_optimizer("AdamW")
    assert step is adamw_step and state.weight_decay == 0.01 and state.lr == 0.01
    state, step = make_optimizer("nadam")
    assert step is nadam_step and state.weight_decay == 0.0
    with pytest.raises(ValueError):
        make_optimizer("sgd")
