"""Multi-room HVAC control on a floors x rooms grid.

Room temperatures evolve by vented heat (action times vent-air delta),
room-to-room exchange along the adjacency graph, and leakage through outside
walls and hallway doors, each scaled by a thermal resistance.  The reward
charges the heated-air volume at the unit electricity cost plus each room's
deviation from the comfort-band center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import ops
from ..errors import ConfigError
from .base import DomainSpec


def grid_layout(floors: int, rooms_per_floor: int):
    """Default building graph: rooms adjacent along a floor and across
    vertically aligned floors; grid-boundary rooms face outside walls; the
    first room of each floor opens to the hallway."""
    J = floors * rooms_per_floor
    q = np.zeros((J, J))
    outside = np.zeros(J)
    hall = np.zeros(J)
    for f in range(floors):
        for r in range(rooms_per_floor):
            j = f * rooms_per_floor + r
            if r + 1 < rooms_per_floor:
                q[j, j + 1] = q[j + 1, j] = 1.0
            if f + 1 < floors:
                k = (f + 1) * rooms_per_floor + r
                q[j, k] = q[k, j] = 1.0
            if f in (0, floors - 1) or r in (0, rooms_per_floor - 1):
                outside[j] = 1.0
            if r == 0:
                hall[j] = 1.0
    return q, outside, hall


@dataclass(frozen=True)
class HvacParams:
    floors: int = 5
    rooms_per_floor: int = 12
    vent_temp: float = 40.0
    outside_temp: float = 5.0
    hall_temp: float = 20.0
    room_resistance: float = 1.0
    outside_resistance: float = 1.0
    hall_resistance: float = 1.0
    alpha: float = 0.05
    unit_cost: float = 1.0
    comfort_low: float = 20.0
    comfort_high: float = 25.0
    action_high: float = 10.0
    start: float = 20.0
    horizon: int = 96
    adjacency: tuple | None = None
    outside_walls: tuple | None = None
    hall_doors: tuple | None = None

    def __post_init__(self):
        if self.floors < 1 or self.rooms_per_floor < 1:
            raise ConfigError("hvac layout needs at least one floor and room")
        if min(self.room_resistance, self.outside_resistance, self.hall_resistance) <= 0:
            raise ConfigError("thermal resistances must be positive")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not self.comfort_low < self.comfort_high:
            raise ConfigError("comfort band must be non-empty")
        q, o, h = self.layout()
        J = self.rooms
        if q.shape != (J, J):
            raise ConfigError(f"adjacency shape {q.shape} != ({J}, {J})")
        if o.shape != (J,) or h.shape != (J,):
            raise ConfigError("outside/hall vectors must have one entry per room")
        if not np.isin(q, (0.0, 1.0)).all() or np.any(np.diag(q) != 0.0):
            raise ConfigError("adjacency entries must be 0/1 with a zero diagonal")
        if not np.array_equal(q, q.T):
            raise ConfigError("adjacency must be symmetric")
        if not (np.isin(o, (0.0, 1.0)).all() and np.isin(h, (0.0, 1.0)).all()):
            raise ConfigError("outside/hall entries must be 0 or 1")

    @property
    def rooms(self) -> int:
        return self.floors * self.rooms_per_floor

    @property
    def comfort_center(self) -> float:
        return 0.5 * (self.comfort_low + self.comfort_high)

    def layout(self):
        if self.adjacency is None and self.outside_walls is None and self.hall_doors is None:
            return grid_layout(self.floors, self.rooms_per_floor)
        q, o, h = grid_layout(self.floors, self.rooms_per_floor)
        if self.adjacency is not None:
            q = np.asarray(self.adjacency, dtype=np.float64)
        if self.outside_walls is not None:
            o = np.asarray(self.outside_walls, dtype=np.float64)
        if self.hall_doors is not None:
            h = np.asarray(self.hall_doors, dtype=np.float64)
        return q, o, h


def hvac_transition(s, a, params: HvacParams) -> list:
    q, o, h = params.layout()
    neighbors = [np.flatnonzero(row) for row in q]
    nxt = []
    for j in range(params.rooms):
        flux = [a[j] * (params.vent_temp - s[j])]
        if len(neighbors[j]):
            flux.append(
                ops.nsum([s[int(k)] - s[j] for k in neighbors[j]])
                / params.room_resistance
            )
        if o[j]:
            flux.append((params.outside_temp - s[j]) / params.outside_resistance)
        if h[j]:
            flux.append((params.hall_temp - s[j]) / params.hall_resistance)
        nxt.append(s[j] + params.alpha * ops.nsum(flux))
    return nxt


def hvac_reward(s, a, params: HvacParams):
    center = params.comfort_center
    terms = [
        a[j] * params.unit_cost + ops.absolute(center - s[j])
        for j in range(params.rooms)
    ]
    return -ops.nsum(terms)


def make_spec(params: HvacParams) -> DomainSpec:
    J = params.rooms
    return DomainSpec(
        name="hvac",
        state_dim=J,
        action_dim=J,
        state_lower=np.full(J, params.comfort_low),
        state_upper=np.full(J, params.comfort_high),
        initial_state=np.full(J, params.start),
        action_bounds=[(0.0, params.action_high)] * J,
        default_horizon=params.horizon,
        build_transition=lambda s, a: hvac_transition(s, a, params),
        build_reward=lambda s, a: hvac_reward(s, a, params),
        params=params,
    )
