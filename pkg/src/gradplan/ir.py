"""Flat tape representation shared by the evaluation engines.

A tape is a topologically ordered list of scalar primitives stored as
structure-of-arrays: one opcode byte plus three int32 operand slots and two
float64 payload slots per node.  Variadic primitives (SUM, DOT) keep their
operand lists in a side pool and store (offset, count) in the operand slots.

Batched planning tapes are *tiled*: the first ``block_size`` nodes describe
one problem instance, replicated logically ``n_instances`` times (node ``p``
of instance ``i`` has id ``i*block_size + p``), followed by tail nodes with
absolute operand ids (the batch loss).  ``flatten`` materializes the
replicated arrays for engines that want a single linear program.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Op(enum.IntEnum):
    CONSTANT = 0
    INPUT = 1
    ADD = 2
    SUB = 3
    MUL = 4
    DIV = 5
    NEG = 6
    ABS = 7
    SIN = 8
    EXP = 9
    SQRT = 10
    SUM = 11
    MIN2 = 12
    MAX2 = 13
    CLAMP = 14
    SELECT = 15
    DOT = 16
    LT = 17


# operand count per op; -1 means variadic (operands live in the pool)
ARITY = {
    Op.CONSTANT: 0,
    Op.INPUT: 0,
    Op.ADD: 2,
    Op.SUB: 2,
    Op.MUL: 2,
    Op.DIV: 2,
    Op.NEG: 1,
    Op.ABS: 1,
    Op.SIN: 1,
    Op.EXP: 1,
    Op.SQRT: 1,
    Op.SUM: -1,
    Op.MIN2: 2,
    Op.MAX2: 2,
    Op.CLAMP: 1,
    Op.SELECT: 3,
    Op.DOT: -1,
    Op.LT: 2,
}

# ops whose output is piecewise in their operands (used for kink margins)
PIECEWISE = (Op.ABS, Op.MIN2, Op.MAX2, Op.CLAMP, Op.LT, Op.SQRT, Op.DIV)

_ARITY_TABLE = np.array([ARITY[Op(k)] for k in range(len(Op))], dtype=np.int8)


@dataclass
class FrozenTape:
    """Immutable evaluation form of a tape."""

    # instance block (node ids 0..block_size-1, operand ids block-local)
    kind: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    pool: np.ndarray
    # tail (absolute operand ids, follows all instance blocks)
    t_kind: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    t_c: np.ndarray
    t_x0: np.ndarray
    t_x1: np.ndarray
    t_pool: np.ndarray
    n_instances: int
    inputs_per_instance: int
    input_positions: np.ndarray  # block-local node ids of INPUT nodes, slot order

    _flat: tuple | None = field(default=None, repr=False)
    _flat_inputs: np.ndarray | None = field(default=None, repr=False)
    _dependent: np.ndarray | None = field(default=None, repr=False)

    @property
    def block_size(self) -> int:
        return len(self.kind)

    @property
    def tail_size(self) -> int:
        return len(self.t_kind)

    @property
    def n_nodes(self) -> int:
        return self.block_size * self.n_instances + self.tail_size

    @property
    def n_inputs(self) -> int:
        return self.inputs_per_instance * self.n_instances

    def flatten(self):
        """Materialize (kind, a, b, c, x0, x1, pool) for the full tape.

        Operand ids in replicated blocks are shifted per instance; INPUT
        slot indexes and SUM/DOT pool offsets are shifted by their own
        strides.  Cached after the first call.
        """
        if self._flat is not None:
            return self._flat
        B, N, T = self.block_size, self.n_instances, self.tail_size
        S, P = self.inputs_per_instance, len(self.pool)
        kind = np.concatenate([np.tile(self.kind, N), self.t_kind])
        x0 = np.concatenate([np.tile(self.x0, N), self.t_x0])
        x1 = np.concatenate([np.tile(self.x1, N), self.t_x1])

        is_input = self.kind == Op.INPUT
        is_pooled = (self.kind == Op.SUM) | (self.kind == Op.DOT)
        # per-slot offset stride for the replicated copies
        a_off = np.where(is_input, S, np.where(is_pooled, P, B)).astype(np.int64)
        a_off[self.a < 0] = 0
        arity = _ARITY_TABLE[self.kind]
        b_off = np.where((arity >= 2) & (self.b >= 0), B, 0).astype(np.int64)
        c_off = np.where((self.kind == Op.SELECT) & (self.c >= 0), B, 0).astype(
            np.int64
        )

        steps = np.arange(N, dtype=np.int64)[:, None]
        a = np.concatenate([(self.a + steps * a_off).ravel(), self.t_a])
        b = np.concatenate([(self.b + steps * b_off).ravel(), self.t_b])
        c = np.concatenate([(self.c + steps * c_off).ravel(), self.t_c])
        pool = np.concatenate([(self.pool + steps * B).ravel(), self.t_pool])
        # tail pool offsets point past the replicated pools
        t_pooled = (self.t_kind == Op.SUM) | (self.t_kind == Op.DOT)
        if t_pooled.any():
            a[B * N :][t_pooled] += P * N
        flat = (
            kind.astype(np.uint8),
            a.astype(np.int32),
            b.astype(np.int32),
            c.astype(np.int32),
            x0,
            x1,
            pool.astype(np.int32),
        )
        self._flat = flat
        return flat

    def flat_input_positions(self) -> np.ndarray:
        """Absolute node ids of all input nodes, ordered (instance, slot)."""
        if self._flat_inputs is None:
            offs = np.arange(self.n_instances, dtype=np.int64) * self.block_size
            self._flat_inputs = (offs[:, None] + self.input_positions[None, :]).ravel()
        return self._flat_inputs

    def input_dependent(self) -> np.ndarray:
        """Per-node flag: does the node's value depend on any input?

        Constant subgraphs cannot move under input perturbations, so their
        piecewise kinks are irrelevant to gradient checks.
        """
        if self._dependent is None:
            kind, a, b, c, _, _, pool = self.flatten()
            dep = np.zeros(len(kind), dtype=bool)
            arity = _ARITY_TABLE[kind]
            for p in range(len(kind)):
                k = kind[p]
                if k == Op.INPUT:
                    dep[p] = True
                elif k == Op.CONSTANT:
                    continue
                elif k == Op.SUM or k == Op.DOT:
                    count = b[p] if k == Op.SUM else 2 * b[p]
                    dep[p] = dep[pool[a[p] : a[p] + count]].any()
                else:
                    d = dep[a[p]]
                    if arity[p] >= 2:
                        d = d or dep[b[p]]
                    if arity[p] >= 3:
                        d = d or dep[c[p]]
                    dep[p] = d
            self._dependent = dep
        return self._dependent

    def instance_ids(self, local_ids, instance=None):
        """Absolute node ids for ``local_ids`` of one or all instances."""
        local_ids = np.asarray(local_ids, dtype=np.int64)
        if instance is not None:
            return instance * self.block_size + local_ids
        offs = np.arange(self.n_instances, dtype=np.int64) * self.block_size
        return offs[:, None] + local_ids[None, :]
