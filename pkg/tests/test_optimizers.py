"""Update-rule fidelity for the five optimizers."""

import math

import numpy as np
import pytest

from gradplan.errors import ConfigError, StepError
from gradplan.optimizers import (
    SGD,
    Adadelta,
    Adagrad,
    Adam,
    RMSProp,
    make_optimizer,
)


def _step_scalar(opt, a, g):
    actions = np.array([a], dtype=np.float64)
    opt.step(actions, np.array([g], dtype=np.float64))
    return float(actions[0])


def test_rmsprop_hand_computed_step():
    # direct substitution: G' = 0.9*0 + 0.1*0.1^2, a' = 1 - 0.1*0.1/sqrt(G'+1e-8)
    expected = 1.0 - 0.1 * 0.1 / math.sqrt(0.9 * 0.0 + 0.1 * 0.1**2 + 1e-8)
    got = _step_scalar(RMSProp(rate=0.1, epsilon=1e-8), 1.0, 0.1)
    assert got == pytest.approx(expected, abs=1e-9)
    assert got == pytest.approx(0.683772, abs=2e-6)


def test_rmsprop_accumulator_updated_before_use():
    opt = RMSProp(rate=0.1, epsilon=1e-8)
    _step_scalar(opt, 1.0, 0.1)
    assert opt.G[0] == pytest.approx(0.001, rel=1e-12)


def test_sgd_hand_computed_step():
    assert _step_scalar(SGD(rate=0.5), 2.0, 4.0) == 0.0


def test_zero_gradient_is_identity_for_all():
    for name in ("sgd", "rmsprop", "adagrad", "adadelta", "adam"):
        opt = make_optimizer(name, rate=0.1)
        actions = np.array([[1.5, -0.5]])
        before = actions.copy()
        opt.step(actions, np.zeros_like(actions))
        assert np.array_equal(actions, before), name


def test_adagrad_hand_computed_step():
    # G' = g^2; a' = a - rate*g/sqrt(G'+eps)
    g, rate, eps = 0.5, 0.1, 1e-10
    expected = 1.0 - rate * g / math.sqrt(g * g + eps)
    assert _step_scalar(Adagrad(rate=rate, epsilon=eps), 1.0, g) == pytest.approx(
        expected, abs=1e-15
    )


def test_adadelta_hand_computed_step():
    # Eg = 0.1*g^2; update = g*sqrt(eps/(Eg+eps)); a' = a - rate*update
    g, rate, eps, rho = 2.0, 1.0, 1e-6, 0.9
    eg = (1 - rho) * g * g
    update = g * math.sqrt(eps / (eg + eps))
    expected = 1.0 - rate * update
    opt = Adadelta(rate=rate)
    assert _step_scalar(opt, 1.0, g) == pytest.approx(expected, abs=1e-15)
    assert opt.avg_sq_update[0] == pytest.approx((1 - rho) * update**2, rel=1e-12)


def test_adam_hand_computed_step():
    # bias-corrected first step: m_hat = g, v_hat = g^2
    g, rate, eps = 0.3, 0.01, 1e-8
    expected = 1.0 - rate * g / (math.sqrt(g * g) + eps)
    assert _step_scalar(Adam(rate=rate, epsilon=eps), 1.0, g) == pytest.approx(
        expected, abs=1e-12
    )


def test_rmsprop_step_magnitude_bound():
    # with zero accumulator: |da| <= rate*|g|/sqrt(0.1 g^2) = rate*sqrt(10)
    rng = np.random.default_rng(7)
    bound = 0.1 * math.sqrt(10.0)
    for _ in range(200):
        g = float(rng.uniform(-1e4, 1e4))
        if g == 0.0:
            continue
        opt = RMSProp(rate=0.1)
        delta = abs(_step_scalar(opt, 0.0, g))
        assert delta <= bound + 1e-12


def test_accumulators_match_action_shape_and_stay_nonnegative():
    rng = np.random.default_rng(3)
    actions = rng.normal(size=(4, 6, 2))
    opt = RMSProp(rate=0.05)
    for _ in range(5):
        opt.step(actions, rng.normal(size=actions.shape))
    assert opt.G.shape == actions.shape
    assert np.all(opt.G >= 0.0)


def test_non_finite_gradient_raises_step_error():
    opt = make_optimizer("rmsprop", rate=0.1)
    actions = np.zeros(3)
    grads = np.array([0.0, np.nan, 1.0])
    with pytest.raises(StepError):
        opt.step(actions, grads)


def test_shape_mismatch_raises_step_error():
    opt = make_optimizer("sgd", rate=0.1)
    with pytest.raises(StepError):
        opt.step(np.zeros(3), np.zeros(4))


def test_unknown_optimizer_rejected():
    with pytest.raises(ConfigError):
        make_optimizer("lbfgs", rate=0.1)


def test_nonpositive_rate_rejected():
    with pytest.raises(ConfigError):
        make_optimizer("sgd", rate=0.0)
