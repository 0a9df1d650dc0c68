"""Networked reservoir control.

Each reservoir holds a water level; a release action sends water to its
downstream neighbor.  Rain adds a fixed inflow, losses are either a
sinusoidal evaporation term (nonlinear) or a 10% drain (linear), and the
reward penalizes levels outside the safe band plus deviation from the
half-capacity target.  The release is capped by the current level inside the
transition, keeping the state-dependent flow constraint exact while the
optimizer's box projection handles only the static bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import ops
from ..errors import ConfigError
from .base import DomainSpec

VARIANTS = ("nonlinear", "linear")


def chain_adjacency(levels: int) -> np.ndarray:
    """Single chain 1 -> 2 -> ... -> J as a strictly lower triangular matrix:
    row j marks the reservoirs directly upstream of j."""
    adj = np.zeros((levels, levels))
    for j in range(1, levels):
        adj[j, j - 1] = 1.0
    return adj


@dataclass(frozen=True)
class ReservoirParams:
    variant: str = "nonlinear"
    levels: int = 20
    rain: float = 10.0
    lower: float = 0.0
    upper: float = 200.0
    safe_low: float = 40.0
    safe_high: float = 160.0
    start: float = 100.0
    # static release box; defaults to the rain rate so that uniformly drawn
    # initial actions cannot pin levels below the release (the state-dependent
    # cap min(a, s) has zero action gradient there)
    max_release: float = 10.0
    adjacency: tuple | None = None  # rows mark upstream links; default: chain
    horizon: int = 120

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"unknown reservoir variant {self.variant!r}; expected {VARIANTS}"
            )
        if self.levels < 1:
            raise ConfigError("reservoir count must be >= 1")
        if not self.max_release > 0:
            raise ConfigError("max_release must be positive")
        if not self.lower <= self.safe_low < self.safe_high <= self.upper:
            raise ConfigError(
                "reservoir bands must satisfy lower <= safe_low < safe_high <= upper"
            )
        adj = self.adjacency_matrix()
        if adj.shape != (self.levels, self.levels):
            raise ConfigError(
                f"adjacency shape {adj.shape} != ({self.levels}, {self.levels})"
            )
        if not np.isin(adj, (0.0, 1.0)).all():
            raise ConfigError("adjacency entries must be 0 or 1")
        if np.any(np.triu(adj) != 0.0):
            raise ConfigError("adjacency must be strictly lower triangular")

    def adjacency_matrix(self) -> np.ndarray:
        if self.adjacency is None:
            return chain_adjacency(self.levels)
        return np.asarray(self.adjacency, dtype=np.float64)

    @property
    def capacity(self) -> float:
        """Largest tank capacity m, the sine argument scale."""
        return float(self.upper)


def reservoir_transition(s, a, params: ReservoirParams) -> list:
    J = params.levels
    m = params.capacity
    upstream = [np.flatnonzero(row) for row in params.adjacency_matrix()]
    flow = [ops.minimum(a[j], s[j]) for j in range(J)]  # a_j <= s_j cap
    nxt = []
    for j in range(J):
        if params.variant == "nonlinear":
            loss = 0.5 * s[j] * ops.sin(s[j] / m)
        else:
            loss = 0.1 * s[j]
        level = s[j] + params.rain - loss - flow[j]
        if len(upstream[j]):
            level = level + ops.nsum([flow[int(k)] for k in upstream[j]])
        nxt.append(level)
    return nxt


def reservoir_reward(s, a, params: ReservoirParams):
    target = 0.5 * (params.upper - params.lower)
    penalties = []
    for j in range(params.levels):
        cost = ops.select(
            ops.less(s[j], params.safe_low),
            -5.0,
            ops.select(ops.less(params.safe_high, s[j]), -100.0, 0.0),
        )
        penalties.append(ops.absolute(cost - 0.1 * ops.absolute(target - s[j])))
    return -ops.nsum(penalties)


def make_spec(params: ReservoirParams) -> DomainSpec:
    J = params.levels
    return DomainSpec(
        name=f"reservoir-{params.variant}",
        state_dim=J,
        action_dim=J,
        state_lower=np.full(J, params.lower),
        state_upper=np.full(J, params.upper),
        action_bounds=[(0.0, params.max_release)] * J,
        initial_state=np.full(J, params.start),
        default_horizon=params.horizon,
        build_transition=lambda s, a: reservoir_transition(s, a, params),
        build_reward=lambda s, a: reservoir_reward(s, a, params),
        params=params,
    )
