"""Tape-based reverse-mode automatic differentiation.

Expressions are recorded onto an append-only :class:`Tape` of scalar
primitives; one forward sweep evaluates every node in order and one backward
sweep accumulates adjoints in reverse order.  The tape is structure-static:
build it once, then re-evaluate with fresh input bindings as often as needed.

Subgradient conventions at kinks (all measure-zero events):

* ``abs`` at 0 has derivative 0;
* ``min2``/``max2`` route the gradient to the first operand on ties;
* ``clamp`` exactly at a boundary uses the interior slope 1;
* ``select`` differentiates only the taken branch, never the condition;
* ``lt`` (indicator) and branch conditions carry no gradient;
* ``sqrt`` at 0 has derivative 0.
"""

from __future__ import annotations

import numpy as np

from .errors import EvalError, StateError, TapeError
from .ir import ARITY, Op, FrozenTape

__all__ = [
    "Op",
    "Sym",
    "Tape",
    "record",
    "forward",
    "backward",
    "piecewise_margin",
]


class Sym:
    """Handle to one tape node; arithmetic operators record new nodes."""

    __slots__ = ("tape", "id")

    def __init__(self, tape: "Tape", node_id: int):
        self.tape = tape
        self.id = node_id

    def _lift(self, other) -> "Sym":
        if isinstance(other, Sym):
            if other.tape is not self.tape:
                raise TapeError("operands recorded on different tapes")
            return other
        return self.tape.constant(float(other))

    def __add__(self, other):
        o = self._lift(other)
        return Sym(self.tape, self.tape.record(Op.ADD, (self.id, o.id)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Sym(self.tape, self.tape.record(Op.SUB, (self.id, o.id)))

    def __rsub__(self, other):
        o = self._lift(other)
        return Sym(self.tape, self.tape.record(Op.SUB, (o.id, self.id)))

    def __mul__(self, other):
        o = self._lift(other)
        return Sym(self.tape, self.tape.record(Op.MUL, (self.id, o.id)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return Sym(self.tape, self.tape.record(Op.DIV, (self.id, o.id)))

    def __rtruediv__(self, other):
        o = self._lift(other)
        return Sym(self.tape, self.tape.record(Op.DIV, (o.id, self.id)))

    def __neg__(self):
        return Sym(self.tape, self.tape.record(Op.NEG, (self.id,)))

    def __abs__(self):
        return Sym(self.tape, self.tape.record(Op.ABS, (self.id,)))

    def __repr__(self):
        return f"Sym({self.id})"


def _node_id(x) -> int:
    return x.id if isinstance(x, Sym) else int(x)


class Tape:
    """Append-only record of scalar primitives forming a computation DAG.

    Node ids are ordinal positions; every operand id is smaller than the id
    of the node that uses it, so a single in-order sweep evaluates the tape.
    A tape may be *sealed* into ``n`` logical instance copies (used for batch
    planning); nodes recorded afterwards form a tail that may reference any
    instance's nodes by absolute id.
    """

    def __init__(self):
        self._kind: list[int] = []
        self._a: list[int] = []
        self._b: list[int] = []
        self._c: list[int] = []
        self._x0: list[float] = []
        self._x1: list[float] = []
        self._pool: list[int] = []
        self._t_kind: list[int] = []
        self._t_a: list[int] = []
        self._t_b: list[int] = []
        self._t_c: list[int] = []
        self._t_x0: list[float] = []
        self._t_x1: list[float] = []
        self._t_pool: list[int] = []
        self._input_positions: list[int] = []
        self._n_instances = 1
        self._sealed = False
        self._frozen: FrozenTape | None = None
        self.values: np.ndarray | None = None
        self.adjoints: np.ndarray | None = None

    # -- construction ---------------------------------------------------

    @property
    def block_size(self) -> int:
        return len(self._kind)

    @property
    def n_instances(self) -> int:
        return self._n_instances

    @property
    def n_nodes(self) -> int:
        return len(self._kind) * self._n_instances + len(self._t_kind)

    @property
    def n_inputs(self) -> int:
        return len(self._input_positions) * self._n_instances

    def record(self, kind, operands=(), payload=()) -> int:
        """Append one primitive; returns the new node's id."""
        kind = Op(kind)
        ops = [_node_id(o) for o in operands]
        arity = ARITY[kind]
        if arity >= 0 and len(ops) != arity:
            raise TapeError(
                f"{kind.name} expects {arity} operands, got {len(ops)}"
            )
        if kind is Op.SUM and not ops:
            raise TapeError("SUM needs at least one operand")
        if kind is Op.DOT and (not ops or len(ops) % 2):
            raise TapeError("DOT needs an even, positive operand count")
        limit = self.n_nodes
        for o in ops:
            if not 0 <= o < limit:
                raise TapeError(f"operand id {o} out of range (tape has {limit})")
        if kind is Op.CONSTANT:
            if len(payload) != 1:
                raise TapeError("CONSTANT needs a single payload value")
        elif kind is Op.CLAMP:
            if len(payload) != 2:
                raise TapeError("CLAMP needs payload (lo, hi)")
            if not payload[0] <= payload[1]:
                raise TapeError(f"CLAMP bounds empty: lo={payload[0]} > hi={payload[1]}")
        elif payload:
            raise TapeError(f"{kind.name} takes no payload")

        self._frozen = None
        if not self._sealed:
            return self._record_block(kind, ops, payload)
        return self._record_tail(kind, ops, payload)

    def _record_block(self, kind, ops, payload):
        nid = len(self._kind)
        a = b = c = -1
        x0 = x1 = 0.0
        if kind is Op.CONSTANT:
            x0 = float(payload[0])
        elif kind is Op.INPUT:
            a = len(self._input_positions)
            self._input_positions.append(nid)
        elif kind in (Op.SUM, Op.DOT):
            a = len(self._pool)
            b = len(ops) if kind is Op.SUM else len(ops) // 2
            self._pool.extend(ops)
        else:
            if kind is Op.CLAMP:
                x0, x1 = float(payload[0]), float(payload[1])
            a = ops[0]
            if len(ops) > 1:
                b = ops[1]
            if len(ops) > 2:
                c = ops[2]
        self._kind.append(int(kind))
        self._a.append(a)
        self._b.append(b)
        self._c.append(c)
        self._x0.append(x0)
        self._x1.append(x1)
        return nid

    def _record_tail(self, kind, ops, payload):
        if kind is Op.INPUT:
            raise TapeError("inputs must be recorded before sealing")
        nid = self.n_nodes
        a = b = c = -1
        x0 = x1 = 0.0
        if kind is Op.CONSTANT:
            x0 = float(payload[0])
        elif kind in (Op.SUM, Op.DOT):
            a = len(self._t_pool)
            b = len(ops) if kind is Op.SUM else len(ops) // 2
            self._t_pool.extend(ops)
        else:
            if kind is Op.CLAMP:
                x0, x1 = float(payload[0]), float(payload[1])
            a = ops[0]
            if len(ops) > 1:
                b = ops[1]
            if len(ops) > 2:
                c = ops[2]
        self._t_kind.append(int(kind))
        self._t_a.append(a)
        self._t_b.append(b)
        self._t_c.append(c)
        self._t_x0.append(x0)
        self._t_x1.append(x1)
        return nid

    def constant(self, value: float) -> Sym:
        return Sym(self, self.record(Op.CONSTANT, (), (float(value),)))

    def input(self) -> Sym:
        return Sym(self, self.record(Op.INPUT))

    def seal(self, n_instances: int) -> None:
        """Replicate the tape recorded so far into ``n_instances`` logical
        copies; later nodes form the tail and address instances absolutely.
        """
        if self._sealed:
            raise StateError("tape already sealed")
        if n_instances < 1:
            raise TapeError("n_instances must be >= 1")
        self._sealed = True
        self._n_instances = int(n_instances)
        self._frozen = None

    def instance_id(self, instance: int, local_id) -> int:
        """Absolute node id of a block-local node in one instance copy."""
        return instance * self.block_size + _node_id(local_id)

    def freeze(self) -> FrozenTape:
        if self._frozen is None:
            self._frozen = FrozenTape(
                kind=np.asarray(self._kind, dtype=np.uint8),
                a=np.asarray(self._a, dtype=np.int32),
                b=np.asarray(self._b, dtype=np.int32),
                c=np.asarray(self._c, dtype=np.int32),
                x0=np.asarray(self._x0, dtype=np.float64),
                x1=np.asarray(self._x1, dtype=np.float64),
                pool=np.asarray(self._pool, dtype=np.int32),
                t_kind=np.asarray(self._t_kind, dtype=np.uint8),
                t_a=np.asarray(self._t_a, dtype=np.int32),
                t_b=np.asarray(self._t_b, dtype=np.int32),
                t_c=np.asarray(self._t_c, dtype=np.int32),
                t_x0=np.asarray(self._t_x0, dtype=np.float64),
                t_x1=np.asarray(self._t_x1, dtype=np.float64),
                t_pool=np.asarray(self._t_pool, dtype=np.int32),
                n_instances=self._n_instances,
                inputs_per_instance=len(self._input_positions),
                input_positions=np.asarray(self._input_positions, dtype=np.int64),
            )
        return self._frozen

    # -- evaluation -------------------------------------------------------

    def bind(self, bindings) -> np.ndarray:
        """Normalize bindings to a flat (n_inputs,) float64 vector.

        Accepts an array of shape (n_inputs,) or (n_instances, inputs/instance),
        or a mapping {input node id (or Sym): value}.
        """
        frozen = self.freeze()
        S, N, B = frozen.inputs_per_instance, frozen.n_instances, frozen.block_size
        if isinstance(bindings, dict):
            vec = np.full(S * N, np.nan)
            slot_of = {int(p): s for s, p in enumerate(frozen.input_positions)}
            for key, val in bindings.items():
                nid = _node_id(key)
                inst, local = divmod(nid, B)
                if local not in slot_of or not 0 <= inst < N:
                    raise EvalError(f"node {nid} is not an input node")
                vec[inst * S + slot_of[local]] = val
            if np.isnan(vec).any():
                missing = int(np.flatnonzero(np.isnan(vec))[0])
                raise EvalError(f"unbound input slot {missing}")
        else:
            vec = np.asarray(bindings, dtype=np.float64).reshape(-1)
            if vec.size != S * N:
                raise EvalError(
                    f"expected {S * N} input values, got {vec.size}"
                )
            vec = vec.copy()
        if not np.all(np.isfinite(vec)):
            raise EvalError("input bindings must be finite")
        return vec


def record(tape: Tape, kind, operands=(), payload=()) -> int:
    """Functional alias of :meth:`Tape.record`."""
    return tape.record(kind, operands, payload)


def forward(tape: Tape, bindings=()) -> np.ndarray:
    """Evaluate every node in tape order; returns the per-node value array.

    Raises :class:`NonFiniteError` on the first non-finite intermediate and
    :class:`EvalError` for unbound or non-finite inputs.
    """
    from . import engines

    inputs = tape.bind(bindings)
    values = engines.active().forward(tape.freeze(), inputs, check=True)
    tape.values = values
    tape.adjoints = None
    return values


def backward(tape: Tape, output) -> np.ndarray:
    """Reverse sweep from ``output``; returns the per-node adjoint array.

    Requires a prior :func:`forward` on this tape (its cached values feed the
    local derivatives).
    """
    from . import engines

    if tape.values is None:
        raise StateError("backward before forward")
    out = _node_id(output)
    if not 0 <= out < tape.n_nodes:
        raise TapeError(f"output id {out} out of range")
    adjoints = engines.active().backward(tape.freeze(), tape.values, out)
    tape.adjoints = adjoints
    return adjoints


def piecewise_margin(tape: Tape, values: np.ndarray) -> float:
    """Distance from the evaluated point to the nearest piecewise boundary.

    Scans abs/min2/max2/clamp/lt kinks, sqrt's endpoint and div's pole over
    nodes whose operands actually depend on inputs (constant subexpressions
    cannot move); an evaluation point is safe for finite-difference checks
    when this margin comfortably exceeds the probe step.
    """
    frozen = tape.freeze()
    kind, a, b, _, x0, x1, _ = frozen.flatten()
    dep = frozen.input_dependent()
    v = values
    best = np.inf
    for op, needs_b, dist in (
        (Op.ABS, False, lambda m: np.abs(v[a[m]])),
        (Op.MIN2, True, lambda m: np.abs(v[a[m]] - v[b[m]])),
        (Op.MAX2, True, lambda m: np.abs(v[a[m]] - v[b[m]])),
        (Op.LT, True, lambda m: np.abs(v[a[m]] - v[b[m]])),
        (
            Op.CLAMP,
            False,
            lambda m: np.minimum(np.abs(v[a[m]] - x0[m]), np.abs(v[a[m]] - x1[m])),
        ),
        (Op.SQRT, False, lambda m: np.abs(v[a[m]])),
        (Op.DIV, True, lambda m: np.abs(v[b[m]])),
    ):
        mask = kind == op
        if not mask.any():
            continue
        moving = dep[a[mask]]
        if needs_b:
            moving = moving | dep[b[mask]]
        if op == Op.DIV:
            moving = dep[b[mask]]  # constant denominators cannot reach the pole
        mask[mask] = moving
        if mask.any():
            best = min(best, float(dist(mask).min()))
    return best
