"""Navigation domain: velocity factor tables, transition and reward."""

import math

import numpy as np
import pytest

import gradplan as gp
from gradplan.domains import make_domain
from gradplan.domains.navigation import (
    NavigationParams,
    nav_lambda,
    nav_reward,
    nav_transition,
)
from gradplan.errors import ConfigError


def sym_step(params, state, action):
    t = gp.Tape()
    s = [t.input() for _ in state]
    a = [t.input() for _ in action]
    nxt = nav_transition(s, a, params)
    reward = nav_reward(s, a, params)
    values = gp.forward(t, np.array([*state, *action], dtype=np.float64))
    return [values[n.id] for n in nxt], values[reward.id]


LINEAR_TABLE = [
    (0.0, 0.05),
    (0.5, 0.05),
    (0.8, 0.2),
    (1.2, 0.2),
    (1.6, 0.4),
    (2.0, 0.4),
    (2.4, 0.6),
    (3.0, 0.6),
    (3.6, 0.8),
    (3.9, 0.8),
    (4.0, 1.0),
    (7.5, 1.0),
]


@pytest.mark.parametrize("d,expected", LINEAR_TABLE)
def test_linear_lambda_table_exact(d, expected):
    assert float(nav_lambda(d, "linear")) == expected


@pytest.mark.parametrize(
    "d,expected", [(0.0, 0.0), (2.0, 0.5), (3.9, 0.975), (4.0, 1.0), (10.0, 1.0)]
)
def test_bilinear_lambda_exact(d, expected):
    assert float(nav_lambda(d, "bilinear")) == expected


def test_nonlinear_lambda_values():
    assert float(nav_lambda(0.0, "nonlinear")) == pytest.approx(0.01, abs=1e-12)
    big = float(nav_lambda(10.0, "nonlinear"))
    assert big == pytest.approx(2.0 / (1.0 + math.exp(-20.0)) - 0.99, abs=1e-15)
    assert big > 1.0


def test_lambda_symbolic_matches_numeric():
    for variant in ("nonlinear", "bilinear", "linear"):
        for d0 in (0.0, 0.3, 1.0, 2.5, 3.7, 4.0, 6.0):
            t = gp.Tape()
            d = t.input()
            lam = nav_lambda(d, variant)
            got = gp.forward(t, {d: d0})[lam.id]
            assert got == pytest.approx(float(nav_lambda(d0, variant)), abs=1e-15)


def test_unknown_variant_rejected():
    with pytest.raises(ConfigError):
        nav_lambda(1.0, "quadratic")
    with pytest.raises(ConfigError):
        NavigationParams(variant="quadratic")


def test_lambda_monotone_in_distance():
    rng = np.random.default_rng(11)
    for variant in ("nonlinear", "bilinear", "linear"):
        d = np.sort(rng.uniform(0.0, 8.0, size=300))
        lam = np.array([float(nav_lambda(x, variant)) for x in d])
        assert np.all(np.diff(lam) >= 0.0), variant


def test_linear_transition_away_from_zone():
    # s0=(0,0), z=(5,5): Manhattan d=10 >= 4 so lambda=1
    params = NavigationParams(variant="linear")
    nxt, _ = sym_step(params, (0.0, 0.0), (1.0, 1.0))
    assert nxt == [1.0, 1.0]


def test_zero_action_is_identity_every_variant():
    for variant in ("nonlinear", "bilinear", "linear"):
        params = NavigationParams(variant=variant)
        for state in ((1.0, 1.0), (4.3, 7.7), (0.0, 10.0)):
            nxt, _ = sym_step(params, state, (0.0, 0.0))
            assert nxt == list(state)  # exact


def test_clamp_keeps_state_at_bound():
    params = NavigationParams(variant="linear")
    nxt, _ = sym_step(params, (10.0, 5.0), (1.0, 0.0))
    assert nxt[0] == 10.0


def test_reward_values():
    params = NavigationParams(goal=(8.0, 9.0))
    _, r = sym_step(params, (0.0, 0.0), (0.0, 0.0))
    assert r == -17.0
    _, r = sym_step(params, (8.0, 0.0), (0.0, 0.0))
    assert r == -9.0
    params_at_goal = NavigationParams(goal=(8.0, 9.0), start=(8.0, 9.0))
    _, r = sym_step(params_at_goal, (8.0, 9.0), (0.0, 0.0))
    assert r == 0.0


def test_reachable_states_stay_in_bounds():
    spec = make_domain("nav-bilinear")
    rng = np.random.default_rng(5)
    actions = gp.init_actions(spec, 8, 30, seed=3)
    actions.data[:] = rng.uniform(-1, 1, actions.data.shape) * 3.0  # out of box on purpose
    gp.project(actions)
    traj = gp.rollout(spec, actions)
    assert np.all(traj.states >= spec.state_lower - 0.0)
    assert np.all(traj.states <= spec.state_upper + 0.0)


def test_numeric_step_matches_symbolic_rollout():
    rng = np.random.default_rng(9)
    for variant in ("nonlinear", "bilinear", "linear"):
        spec = make_domain(f"nav-{variant}")
        actions = gp.init_actions(spec, 1, 12, seed=17)
        traj = gp.rollout(spec, actions)
        state = spec.initial_state
        for step in range(12):
            state, reward = spec.numeric_step(state, actions.data[0, step])
            assert np.allclose(state, traj.states[0, step + 1], rtol=1e-13, atol=0)
            assert reward == pytest.approx(traj.rewards[0, step], rel=1e-13)


def test_params_validation():
    with pytest.raises(ConfigError):
        NavigationParams(goal=(11.0, 5.0))  # outside bounds
    with pytest.raises(ConfigError):
        NavigationParams(center=(-1.0, 5.0))


def test_default_sizes():
    spec = make_domain("nav-nonlinear")
    assert spec.state_dim == 2
    assert spec.default_horizon == 120
