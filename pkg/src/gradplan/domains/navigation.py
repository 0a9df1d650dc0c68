"""Two-dimensional navigation with a velocity-reduction zone.

An agent moves inside a box toward a goal; actions are scaled by a factor
that shrinks near the zone center.  Three variants share the move/clamp
skeleton and differ in how the factor depends on the distance to the center:
a smooth sigmoid of the Euclidean distance, a ramp of the Manhattan distance,
or a piecewise-constant table of the Manhattan distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import ops
from ..errors import ConfigError
from .base import DomainSpec

VARIANTS = ("nonlinear", "bilinear", "linear")


@dataclass(frozen=True)
class NavigationParams:
    variant: str = "nonlinear"
    center: tuple = (5.0, 5.0)
    goal: tuple = (9.0, 9.0)
    lower: tuple = (0.0, 0.0)
    upper: tuple = (10.0, 10.0)
    start: tuple = (1.0, 1.0)
    action_low: float = -1.0
    action_high: float = 1.0
    horizon: int = 120

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"unknown navigation variant {self.variant!r}; expected {VARIANTS}"
            )
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        for label, v in (("center", self.center), ("goal", self.goal), ("start", self.start)):
            v = np.asarray(v, dtype=np.float64)
            if not (np.all(lo <= v) and np.all(v <= hi)):
                raise ConfigError(f"navigation {label} {tuple(v)} outside state bounds")


def nav_lambda(d, variant: str):
    """Velocity reduction factor as a function of zone distance.

    nonlinear: 2/(1+exp(-2d)) - 0.99 (note the d -> inf limit is 1.01, kept
    verbatim); bilinear: d/4 below 4, else 1; linear: the six-step table.
    """
    if variant == "nonlinear":
        return 2.0 / (1.0 + ops.exp(-2.0 * d)) - 0.99
    if variant == "bilinear":
        return ops.select(ops.less(d, 4.0), d / 4.0, 1.0)
    if variant == "linear":
        return ops.select(
            ops.less(d, 0.8),
            0.05,
            ops.select(
                ops.less(d, 1.6),
                0.2,
                ops.select(
                    ops.less(d, 2.4),
                    0.4,
                    ops.select(
                        ops.less(d, 3.6),
                        0.6,
                        ops.select(ops.less(d, 4.0), 0.8, 1.0),
                    ),
                ),
            ),
        )
    raise ConfigError(f"unknown navigation variant {variant!r}")


def _lift_terms(d_terms):
    return ops.nsum(d_terms) if len(d_terms) > 1 else d_terms[0]


def zone_distance(s, params: NavigationParams):
    """Euclidean distance for the nonlinear variant, Manhattan otherwise."""
    z = params.center
    if params.variant == "nonlinear":
        sq = [(s[j] - z[j]) * (s[j] - z[j]) for j in range(len(z))]
        return ops.sqrt(_lift_terms(sq))
    return _lift_terms([ops.absolute(s[j] - z[j]) for j in range(len(z))])


def nav_transition(s, a, params: NavigationParams) -> list:
    lam = nav_lambda(zone_distance(s, params), params.variant)
    return [
        ops.clamp(s[j] + lam * a[j], params.lower[j], params.upper[j])
        for j in range(len(s))
    ]


def nav_reward(s, a, params: NavigationParams):
    g = params.goal
    return -_lift_terms([ops.absolute(s[j] - g[j]) for j in range(len(g))])


def make_spec(params: NavigationParams) -> DomainSpec:
    dim = len(params.start)
    return DomainSpec(
        name=f"nav-{params.variant}",
        state_dim=dim,
        action_dim=dim,
        state_lower=params.lower,
        state_upper=params.upper,
        action_bounds=[(params.action_low, params.action_high)] * dim,
        initial_state=params.start,
        default_horizon=params.horizon,
        build_transition=lambda s, a: nav_transition(s, a, params),
        build_reward=lambda s, a: nav_reward(s, a, params),
        params=params,
    )
