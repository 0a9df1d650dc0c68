"""Batch planning by backpropagation through the unrolled dynamics.

One tape holds N structurally identical instance rollouts plus the batch
loss L = (1/N) * sum_i V_i^2; minimizing L maximizes each non-positive V_i
independently.  The tape is built once per (domain, horizon, batch)
configuration and re-evaluated every epoch with fresh action bindings; each
epoch runs rollout -> loss -> backward -> optimizer step -> projection, and
the best feasible instance ever observed is returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import engines
from .domains.base import DomainSpec
from .errors import ConfigError, NonFiniteError, RolloutError
from .ir import Op
from .optimizers import Optimizer, make_optimizer
from .tape import Sym, Tape


@dataclass
class ActionTensor:
    """Free optimization variables indexed (instance, step, dimension)."""

    data: np.ndarray
    bounds: np.ndarray  # (dim, 2)

    def copy(self) -> "ActionTensor":
        return ActionTensor(self.data.copy(), self.bounds)


@dataclass
class Trajectory:
    """States, per-step rewards and cumulative values from one rollout."""

    states: np.ndarray  # (N, H+1, state_dim)
    rewards: np.ndarray  # (N, H)
    values: np.ndarray  # (N,)
    graph: "RolloutGraph | None" = field(default=None, repr=False)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    max_value: float
    best_value: float
    wall_ms: float


@dataclass
class PlanResult:
    best_instance: int
    best_actions: np.ndarray  # (H, action_dim)
    best_value: float
    history: list[EpochRecord]
    epochs_run: int
    seed: int


@dataclass
class PlannerConfig:
    instances: int = 100
    horizon: int | None = None
    epochs: int = 1000
    optimizer: str = "rmsprop"
    rate: float = 0.01
    epsilon: float | None = None
    seed: int = 0
    tol: float = 1e-6
    patience: int = 200
    workers: int = 1
    target_value: float | None = None

    def __post_init__(self):
        if self.instances < 1:
            raise ConfigError("instances must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not self.rate > 0:
            raise ConfigError(f"rate must be positive, got {self.rate}")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def init_actions(spec: DomainSpec, instances: int, horizon: int, seed: int) -> ActionTensor:
    """Independent uniform draws over each dimension's [lo, hi] box."""
    if instances < 1 or horizon < 1:
        raise ConfigError("instances and horizon must be >= 1")
    bounds = np.asarray(spec.action_bounds, dtype=np.float64)
    if np.any(bounds[:, 0] > bounds[:, 1]):
        raise ConfigError("empty action bound interval")
    lo, hi = bounds[:, 0], bounds[:, 1]
    rng = np.random.default_rng(seed)
    u = rng.random((instances, horizon, bounds.shape[0]))
    return ActionTensor(lo + (hi - lo) * u, bounds)


def project(actions: ActionTensor) -> ActionTensor:
    """Clip every coordinate into its per-dimension box (idempotent)."""
    np.clip(
        actions.data, actions.bounds[:, 0], actions.bounds[:, 1], out=actions.data
    )
    return actions


def project_discrete(logits) -> np.ndarray:
    """One-hot projection onto the argmax; ties go to the lowest index."""
    logits = np.asarray(logits, dtype=np.float64)
    out = np.zeros_like(logits)
    out[np.argmax(logits)] = 1.0
    return out


def select_best(values) -> int:
    """Index of the maximal value; ties go to the lowest index."""
    values = np.asarray(values)
    if values.size < 1:
        raise ConfigError("select_best needs at least one value")
    return int(np.argmax(values))


def batch_loss(tape: Tape, value_nodes) -> Sym:
    """Record L = (1/N) * sum_i V_i^2 on the tape holding the rollouts."""
    ids = [v.id if isinstance(v, Sym) else int(v) for v in value_nodes]
    if not ids:
        raise ConfigError("batch_loss needs at least one instance value")
    squares = [tape.record(Op.MUL, (v, v)) for v in ids]
    total = tape.record(Op.SUM, squares) if len(squares) > 1 else squares[0]
    count = tape.record(Op.CONSTANT, (), (float(len(ids)),))
    return Sym(tape, tape.record(Op.DIV, (total, count)))


def optimizer_step(state: Optimizer, actions: ActionTensor, grads) -> tuple[ActionTensor, Optimizer]:
    """Apply one optimizer update in place; accumulators update in place too."""
    state.step(actions.data, np.asarray(grads))
    return actions, state


class RolloutGraph:
    """The unrolled tape for (domain, horizon, batch), reusable every epoch."""

    def __init__(self, spec: DomainSpec, horizon: int, instances: int):
        if horizon < 1 or instances < 1:
            raise ConfigError("horizon and instances must be >= 1")
        self.spec = spec
        self.horizon = horizon
        self.instances = instances
        tape = Tape()
        H, dim, sd = horizon, spec.action_dim, spec.state_dim
        act = [[tape.input() for _ in range(dim)] for _ in range(H)]
        state = [tape.constant(v) for v in spec.initial_state]
        state_ids = [[s.id for s in state]]
        reward_ids = []
        seg_starts = []
        for t in range(H):
            seg_starts.append(tape.block_size)
            reward = spec.build_reward(state, act[t])
            state = spec.build_transition(state, act[t])
            reward_ids.append(reward.id)
            state_ids.append([s.id for s in state])
        value = Sym(tape, tape.record(Op.SUM, reward_ids)) if H > 1 else Sym(
            tape, reward_ids[0]
        )
        v_local = value.id
        tape.seal(instances)
        frozen_ids = [tape.instance_id(i, v_local) for i in range(instances)]
        self.loss_id = batch_loss(tape, frozen_ids).id
        self.tape = tape
        self.frozen = tape.freeze()
        self._v_ids = np.asarray(frozen_ids, dtype=np.int64)
        self._state_ids = np.asarray(state_ids, dtype=np.int64)  # (H+1, sd)
        self._reward_ids = np.asarray(reward_ids, dtype=np.int64)  # (H,)
        self._seg_starts = np.asarray(seg_starts, dtype=np.int64)
        self._values_buf = None
        self._adjoint_buf = None

    @property
    def n_action_variables(self) -> int:
        return self.instances * self.horizon * self.spec.action_dim

    def evaluate(self, action_data: np.ndarray, workers: int = 1) -> np.ndarray:
        """Forward sweep; returns the per-node value buffer (reused)."""
        engine = engines.active()
        if self._values_buf is None:
            self._values_buf = np.empty(self.frozen.n_nodes, dtype=np.float64)
        try:
            return engine.forward(
                self.frozen,
                action_data.reshape(self.instances, -1),
                check=True,
                out=self._values_buf,
                workers=workers,
            )
        except NonFiniteError as err:
            raise self._locate(err.node) from None

    def _locate(self, node: int) -> RolloutError:
        block_total = self.frozen.block_size * self.instances
        if node >= block_total:
            return RolloutError(-1, -1, "non-finite batch loss")
        instance, local = divmod(node, self.frozen.block_size)
        step = int(np.searchsorted(self._seg_starts, local, side="right"))
        return RolloutError(int(instance), step)

    def loss_and_values(self, node_values: np.ndarray):
        return float(node_values[self.loss_id]), node_values[self._v_ids]

    def gradient(self, node_values: np.ndarray, workers: int = 1) -> np.ndarray:
        """d loss / d action for every a_{itj}, via one reverse sweep."""
        engine = engines.active()
        if self._adjoint_buf is None:
            self._adjoint_buf = np.empty(self.frozen.n_nodes, dtype=np.float64)
        adj = engine.backward(
            self.frozen,
            node_values,
            self.loss_id,
            workers=workers,
            out=self._adjoint_buf,
        )
        return adj[self.frozen.flat_input_positions()].reshape(
            self.instances, self.horizon, self.spec.action_dim
        )

    def value_gradient(self, node_values: np.ndarray, instance: int) -> np.ndarray:
        """d V_i / d a_i for one instance (seed at its value node)."""
        adj = engines.active().backward(
            self.frozen, node_values, int(self._v_ids[instance])
        )
        pos = self.frozen.flat_input_positions().reshape(self.instances, -1)
        return adj[pos[instance]].reshape(self.horizon, self.spec.action_dim)

    def trajectory(self, node_values: np.ndarray) -> Trajectory:
        offs = (
            np.arange(self.instances, dtype=np.int64)[:, None, None]
            * self.frozen.block_size
        )
        states = node_values[offs + self._state_ids[None, :, :]]
        rewards = node_values[
            offs[:, :, 0] + self._reward_ids[None, :]
        ]
        return Trajectory(
            states=states,
            rewards=rewards,
            values=node_values[self._v_ids].copy(),
            graph=self,
        )


def rollout(spec: DomainSpec, actions: ActionTensor, workers: int = 1) -> Trajectory:
    """Unroll the domain under the given actions; gradients stay available
    through the attached graph."""
    n, horizon, _ = actions.data.shape
    graph = RolloutGraph(spec, horizon, n)
    node_values = graph.evaluate(actions.data, workers=workers)
    return graph.trajectory(node_values)


def plan(
    spec: DomainSpec,
    config: PlannerConfig,
    initial_actions: ActionTensor | None = None,
    graph: RolloutGraph | None = None,
) -> PlanResult:
    """Projected gradient descent over the batch; returns the best instance.

    Stops after ``epochs`` epochs, or once the best-so-far value has not
    improved by more than ``tol`` for ``patience`` consecutive epochs, or as
    soon as ``target_value`` is reached.  All reported values are measured on
    projected (feasible) actions.
    """
    horizon = config.horizon if config.horizon is not None else spec.default_horizon
    if graph is None:
        graph = RolloutGraph(spec, horizon, config.instances)
    if initial_actions is None:
        actions = init_actions(spec, config.instances, horizon, config.seed)
    else:
        actions = initial_actions.copy()
    project(actions)
    optimizer = make_optimizer(config.optimizer, config.rate, config.epsilon)

    t0 = time.perf_counter()

    def record(epoch, loss, values, best_value):
        return EpochRecord(
            epoch=epoch,
            loss=loss,
            max_value=float(values.max()),
            best_value=best_value,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )

    node_values = graph.evaluate(actions.data, workers=config.workers)
    loss, values = graph.loss_and_values(node_values)
    best_instance = select_best(values)
    best_value = float(values[best_instance])
    best_actions = actions.data[best_instance].copy()
    history = [record(0, loss, values, best_value)]
    epochs_run = 0
    stall = 0
    for epoch in range(1, config.epochs + 1):
        if config.target_value is not None and best_value >= config.target_value:
            break
        grads = graph.gradient(node_values, workers=config.workers)
        optimizer.step(actions.data, grads)
        project(actions)
        node_values = graph.evaluate(actions.data, workers=config.workers)
        loss, values = graph.loss_and_values(node_values)
        epochs_run = epoch
        candidate = select_best(values)
        if float(values[candidate]) > best_value:
            improved = float(values[candidate]) - best_value
            best_value = float(values[candidate])
            best_instance = candidate
            best_actions = actions.data[candidate].copy()
            stall = 0 if improved > config.tol else stall + 1
        else:
            stall += 1
        history.append(record(epoch, loss, values, best_value))
        if stall >= config.patience:
            break
    return PlanResult(
        best_instance=best_instance,
        best_actions=best_actions,
        best_value=best_value,
        history=history,
        epochs_run=epochs_run,
        seed=config.seed,
    )
