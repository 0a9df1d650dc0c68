"""Shared test helpers: gradient cross-checks against finite differences."""

from __future__ import annotations

import numpy as np

from gradplan import engines
from gradplan.domains import make_domain
from gradplan.fdiff import finite_difference_gradient
from gradplan.planner import RolloutGraph
from gradplan.tape import piecewise_margin

EPS = np.finfo(np.float64).eps


def sample_interior_point(graph, rng, margin=1e-3, max_tries=200):
    """Uniform action draw re-sampled until every piecewise node keeps a
    ``margin`` gap to its boundary (so finite differences stay one-sided)."""
    spec = graph.spec
    lo = spec.action_bounds[:, 0] + margin
    hi = spec.action_bounds[:, 1] - margin
    engine = engines.active()
    for _ in range(max_tries):
        actions = lo + (hi - lo) * rng.random(
            (graph.instances, graph.horizon, spec.action_dim)
        )
        values = engine.forward(
            graph.frozen, actions.reshape(graph.instances, -1), check=True
        )
        if piecewise_margin(graph.tape, values) >= margin:
            return actions, values
    raise AssertionError(f"no interior point found in {max_tries} tries")


def relative_gradient_error(graph, actions, values, h=1e-5):
    """Max relative disagreement between backward() and central differences.

    Coordinates below the finite-difference resolution floor (set by the
    loss magnitude and probe step) are compared against that floor instead
    of relatively; everything else is |ad-fd| / max(|ad|, |fd|).
    """
    engine = engines.active()
    frozen = graph.frozen
    ad = graph.gradient(values).reshape(-1)
    loss_row = graph.loss_id

    def evaluate_columns(cols):
        return engine.forward_cols(frozen, cols, check=True)[loss_row]

    fd = finite_difference_gradient(
        evaluate_columns, actions.reshape(-1), h, batched=True
    )
    floor = 64.0 * EPS * max(1.0, abs(values[loss_row])) / h
    denom = np.maximum(np.maximum(np.abs(ad), np.abs(fd)), floor / 1e-5)
    return float(np.max(np.abs(ad - fd) / denom))


def gradient_check_domain(
    name,
    overrides=None,
    horizon=10,
    instances=4,
    points=100,
    margin=1e-3,
    h=1e-5,
    seed=0,
):
    """Max relative gradient error over ``points`` safe random action draws."""
    spec = make_domain(name, **(overrides or {}))
    graph = RolloutGraph(spec, horizon, instances)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        actions, values = sample_interior_point(graph, rng, margin=margin)
        worst = max(worst, relative_gradient_error(graph, actions, values, h=h))
    return worst
