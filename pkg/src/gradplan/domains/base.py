"""Domain container: dimensions, bounds, constants and graph builders."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class DomainSpec:
    """One planning domain, ready to unroll.

    ``build_transition`` and ``build_reward`` are generic over their operand
    type: handed tape symbols they record the unrolled graph, handed floats
    they simulate numerically (used by heuristic baselines and cross-checks).
    Both take (state sequence, action sequence) and are pure.
    """

    name: str
    state_dim: int
    action_dim: int
    state_lower: np.ndarray
    state_upper: np.ndarray
    action_bounds: np.ndarray  # (action_dim, 2) [lo, hi] per dimension
    initial_state: np.ndarray
    default_horizon: int
    build_transition: Callable[[Sequence, Sequence], list]
    build_reward: Callable[[Sequence, Sequence], object]
    params: object = field(default=None, repr=False)

    def __post_init__(self):
        for attr in ("state_lower", "state_upper", "initial_state"):
            object.__setattr__(
                self, attr, np.asarray(getattr(self, attr), dtype=np.float64)
            )
        object.__setattr__(
            self, "action_bounds", np.asarray(self.action_bounds, dtype=np.float64)
        )
        if self.action_bounds.shape != (self.action_dim, 2):
            raise ConfigError(
                f"action_bounds shape {self.action_bounds.shape} != ({self.action_dim}, 2)"
            )
        if np.any(self.action_bounds[:, 0] > self.action_bounds[:, 1]):
            j = int(np.flatnonzero(self.action_bounds[:, 0] > self.action_bounds[:, 1])[0])
            raise ConfigError(f"empty action bound interval for dimension {j}")
        if not (
            np.all(self.state_lower <= self.initial_state)
            and np.all(self.initial_state <= self.state_upper)
        ):
            raise ConfigError("initial state violates state bounds")
        if self.default_horizon < 1:
            raise ConfigError("default_horizon must be >= 1")

    def numeric_step(self, state, action):
        """One plain-number transition/reward step (no tape)."""
        s = list(np.asarray(state, dtype=np.float64))
        a = list(np.asarray(action, dtype=np.float64))
        nxt = self.build_transition(s, a)
        r = self.build_reward(s, a)
        return np.asarray(nxt, dtype=np.float64), float(r)
