"""Hand-designed closed-loop comparator policies.

These are deliberately simple greedy/proportional rules evaluated by plain
forward simulation (no gradients); they exist to give the planner something
to beat, not as contributions.
"""

from __future__ import annotations

import numpy as np

from .domains.base import DomainSpec
from .domains.hvac import HvacParams
from .domains.navigation import NavigationParams
from .domains.reservoir import ReservoirParams
from .errors import ConfigError


def nav_heuristic(state, params: NavigationParams) -> np.ndarray:
    """Greedy move toward the goal at the largest feasible step."""
    step = np.asarray(params.goal, dtype=np.float64) - np.asarray(state)
    return np.clip(step, params.action_low, params.action_high)


def reservoir_heuristic(state, params: ReservoirParams) -> np.ndarray:
    """Release the excess above half capacity, never more than the level
    (and never more than the release box allows)."""
    state = np.asarray(state, dtype=np.float64)
    half = 0.5 * (params.upper - params.lower)
    release = np.minimum(np.maximum(state - half, 0.0), state)
    return np.minimum(release, params.max_release)


def hvac_heuristic(state, params: HvacParams) -> np.ndarray:
    """Proportional heating (gain 1) when below the band center; no cooling."""
    gap = params.comfort_center - np.asarray(state, dtype=np.float64)
    return np.clip(gap, 0.0, params.action_high)


def heuristic_policy(spec: DomainSpec):
    if isinstance(spec.params, NavigationParams):
        rule = nav_heuristic
    elif isinstance(spec.params, ReservoirParams):
        rule = reservoir_heuristic
    elif isinstance(spec.params, HvacParams):
        rule = hvac_heuristic
    else:
        raise ConfigError(f"no heuristic policy for domain {spec.name!r}")
    return lambda state: rule(state, spec.params)


def heuristic_rollout(spec: DomainSpec, horizon: int):
    """Simulate the domain heuristic closed-loop for ``horizon`` steps.

    Returns (states (H+1, sd), actions (H, dim), rewards (H,), value).
    """
    policy = heuristic_policy(spec)
    state = np.asarray(spec.initial_state, dtype=np.float64)
    states = [state]
    actions = []
    rewards = []
    for _ in range(horizon):
        action = np.asarray(policy(state), dtype=np.float64)
        state, reward = spec.numeric_step(state, action)
        states.append(state)
        actions.append(action)
        rewards.append(reward)
    return (
        np.asarray(states),
        np.asarray(actions),
        np.asarray(rewards),
        float(np.sum(rewards)),
    )
