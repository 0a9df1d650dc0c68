"""HVAC domain: thermal flux terms, comfort reward, building layout."""

import numpy as np
import pytest

import gradplan as gp
from gradplan.domains import make_domain
from gradplan.domains.hvac import (
    HvacParams,
    grid_layout,
    hvac_reward,
    hvac_transition,
)
from gradplan.errors import ConfigError


def sym_step(params, state, action):
    t = gp.Tape()
    s = [t.input() for _ in state]
    a = [t.input() for _ in action]
    nxt = hvac_transition(s, a, params)
    reward = hvac_reward(s, a, params)
    values = gp.forward(t, np.array([*state, *action], dtype=np.float64))
    return [values[n.id] for n in nxt], values[reward.id]


def isolated_room(**kw):
    defaults = dict(
        floors=1, rooms_per_floor=1,
        adjacency=((0.0,),), outside_walls=(0.0,), hall_doors=(0.0,),
    )
    defaults.update(kw)
    return HvacParams(**defaults)


def test_uniform_temperature_is_exact_fixed_point():
    # zero action, boundary temperatures equal to the room temperature
    params = HvacParams(
        floors=2, rooms_per_floor=3, outside_temp=21.5, hall_temp=21.5
    )
    state = [21.5] * params.rooms
    nxt, _ = sym_step(params, state, [0.0] * params.rooms)
    assert nxt == state  # bitwise


def test_vent_term_only():
    params = isolated_room(vent_temp=40.0, alpha=0.1)
    nxt, _ = sym_step(params, (20.0,), (1.0,))
    assert nxt[0] == pytest.approx(22.0, abs=1e-15)


def test_outside_leak_only():
    params = isolated_room(
        outside_walls=(1.0,), outside_temp=0.0, outside_resistance=2.0, alpha=0.1
    )
    nxt, _ = sym_step(params, (10.0,), (0.0,))
    assert nxt[0] == pytest.approx(9.5, abs=1e-15)


def test_hall_leak_only():
    params = isolated_room(
        hall_doors=(1.0,), hall_temp=20.0, hall_resistance=4.0, alpha=0.1
    )
    nxt, _ = sym_step(params, (28.0,), (0.0,))
    assert nxt[0] == pytest.approx(28.0 + 0.1 * (20.0 - 28.0) / 4.0, abs=1e-15)


def test_room_exchange_flows_toward_hotter_neighbor():
    params = HvacParams(
        floors=1, rooms_per_floor=2,
        outside_walls=(0.0, 0.0), hall_doors=(0.0, 0.0), alpha=0.1,
    )
    nxt, _ = sym_step(params, (20.0, 30.0), (0.0, 0.0))
    assert nxt[0] == pytest.approx(21.0, abs=1e-15)
    assert nxt[1] == pytest.approx(29.0, abs=1e-15)


def test_reward_zero_at_center_with_no_heating():
    params = isolated_room()
    _, r = sym_step(params, (22.5,), (0.0,))
    assert r == 0.0


def test_reward_deviation_below_center():
    params = isolated_room()
    _, r = sym_step(params, (20.0,), (0.0,))
    assert r == -2.5


def test_reward_pure_energy_cost():
    params = HvacParams(floors=1, rooms_per_floor=4, unit_cost=1.0)
    rooms = params.rooms
    _, r = sym_step(params, [22.5] * rooms, [1.0] * rooms)
    assert r == -float(rooms)


def test_default_layout_sizes():
    spec = make_domain("hvac")
    assert spec.state_dim == 60
    assert spec.default_horizon == 96
    q, o, h = spec.params.layout()
    assert q.shape == (60, 60)
    assert np.array_equal(q, q.T)
    assert np.all(np.diag(q) == 0)
    # 5 floors x 12 rooms: horizontal 5*11 + vertical 4*12 undirected edges
    assert q.sum() == 2 * (5 * 11 + 4 * 12)
    assert h.sum() == 5  # one hallway door per floor
    interior = [f * 12 + r for f in range(1, 4) for r in range(1, 11)]
    assert np.all(o[interior] == 0)
    assert o.sum() == 60 - len(interior)


def test_grid_layout_small():
    q, o, h = grid_layout(2, 3)
    # room 0 adjacent to room 1 (same floor) and room 3 (above)
    assert q[0, 1] == 1 and q[0, 3] == 1 and q[0, 2] == 0
    assert o.all()  # every room of a 2x3 grid touches the envelope
    assert list(h) == [1.0, 0.0, 0.0, 1.0, 0.0, 0.0]


def test_dimension_mismatch_rejected():
    with pytest.raises(ConfigError):
        HvacParams(floors=1, rooms_per_floor=2, adjacency=((0.0,),))
    with pytest.raises(ConfigError):
        HvacParams(floors=1, rooms_per_floor=2, outside_walls=(1.0,))
    with pytest.raises(ConfigError):
        HvacParams(
            floors=1, rooms_per_floor=2, adjacency=((0.0, 1.0), (1.0, 1.0))
        )  # nonzero diagonal


def test_invalid_constants_rejected():
    with pytest.raises(ConfigError):
        HvacParams(alpha=0.0)
    with pytest.raises(ConfigError):
        HvacParams(room_resistance=-1.0)
    with pytest.raises(ConfigError):
        HvacParams(comfort_low=25.0, comfort_high=20.0)


def test_numeric_step_matches_symbolic_rollout():
    spec = make_domain("hvac", floors=2, rooms_per_floor=3)
    actions = gp.init_actions(spec, 1, 6, seed=47)
    traj = gp.rollout(spec, actions)
    state = spec.initial_state
    for step in range(6):
        state, reward = spec.numeric_step(state, actions.data[0, step])
        assert np.allclose(state, traj.states[0, step + 1], rtol=1e-13, atol=1e-12)
        assert reward == pytest.approx(traj.rewards[0, step], rel=1e-12)


def test_rewards_are_nonpositive_under_random_rollouts():
    for name, kw in (
        ("nav-nonlinear", {}),
        ("nav-bilinear", {}),
        ("nav-linear", {}),
        ("reservoir-nonlinear", {"levels": 4}),
        ("reservoir-linear", {"levels": 4}),
        ("hvac", {"floors": 1, "rooms_per_floor": 4}),
    ):
        spec = make_domain(name, **kw)
        actions = gp.init_actions(spec, 3, 8, seed=53)
        traj = gp.rollout(spec, actions)
        assert np.all(traj.rewards <= 0.0), name
        assert np.allclose(traj.values, traj.rewards.sum(axis=1), rtol=1e-12)
