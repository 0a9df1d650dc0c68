"""Pure-NumPy tape interpreter (fallback when the compiled core is absent).

Tiled tapes are evaluated block-vectorized: node position ``p`` is computed
for all instances at once as one row operation, so the Python-level loop is
over the instance block only, not the full replicated tape.  The tail and
per-column (finite-difference) sweeps interpret flat node arrays directly.

``workers`` is accepted for API parity and treated as a cap only; the whole
batch is one vectorized sweep, so results are trivially independent of it.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteError
from ..ir import FrozenTape, Op

name = "python"

_CONST = int(Op.CONSTANT)
_INPUT = int(Op.INPUT)
_ADD = int(Op.ADD)
_SUB = int(Op.SUB)
_MUL = int(Op.MUL)
_DIV = int(Op.DIV)
_NEG = int(Op.NEG)
_ABS = int(Op.ABS)
_SIN = int(Op.SIN)
_EXP = int(Op.EXP)
_SQRT = int(Op.SQRT)
_SUM = int(Op.SUM)
_MIN2 = int(Op.MIN2)
_MAX2 = int(Op.MAX2)
_CLAMP = int(Op.CLAMP)
_SELECT = int(Op.SELECT)
_DOT = int(Op.DOT)
_LT = int(Op.LT)


def _sweep_rows(kind, a, b, c, x0, x1, pool, V, start=0):
    """Evaluate nodes [start, len(kind)) over the row matrix V in order."""
    for p in range(start, len(kind)):
        k = kind[p]
        if k == _ADD:
            np.add(V[a[p]], V[b[p]], out=V[p])
        elif k == _MUL:
            np.multiply(V[a[p]], V[b[p]], out=V[p])
        elif k == _SUB:
            np.subtract(V[a[p]], V[b[p]], out=V[p])
        elif k == _DIV:
            np.divide(V[a[p]], V[b[p]], out=V[p])
        elif k == _NEG:
            np.negative(V[a[p]], out=V[p])
        elif k == _ABS:
            np.abs(V[a[p]], out=V[p])
        elif k == _SIN:
            np.sin(V[a[p]], out=V[p])
        elif k == _EXP:
            np.exp(V[a[p]], out=V[p])
        elif k == _SQRT:
            np.sqrt(V[a[p]], out=V[p])
        elif k == _SUM:
            ids = pool[a[p] : a[p] + b[p]]
            V[p] = np.add.reduce(V[ids], axis=0)
        elif k == _MIN2:
            np.minimum(V[a[p]], V[b[p]], out=V[p])
        elif k == _MAX2:
            np.maximum(V[a[p]], V[b[p]], out=V[p])
        elif k == _CLAMP:
            np.clip(V[a[p]], x0[p], x1[p], out=V[p])
        elif k == _SELECT:
            V[p] = np.where(V[a[p]] != 0.0, V[b[p]], V[c[p]])
        elif k == _DOT:
            n = b[p]
            xs = pool[a[p] : a[p] + n]
            ys = pool[a[p] + n : a[p] + 2 * n]
            V[p] = np.einsum("kn,kn->n", V[xs], V[ys])
        elif k == _LT:
            V[p] = np.where(V[a[p]] < V[b[p]], 1.0, 0.0)
        elif k == _CONST:
            V[p] = x0[p]
        # INPUT rows are pre-bound


def _sweep_rows_backward(kind, a, b, c, x0, x1, pool, V, A, stop=0):
    """Accumulate adjoints for nodes [stop, len(kind)) in reverse order."""
    for p in range(len(kind) - 1, stop - 1, -1):
        k = kind[p]
        g = A[p]
        if k == _ADD:
            A[a[p]] += g
            A[b[p]] += g
        elif k == _MUL:
            A[a[p]] += g * V[b[p]]
            A[b[p]] += g * V[a[p]]
        elif k == _SUB:
            A[a[p]] += g
            A[b[p]] -= g
        elif k == _DIV:
            A[a[p]] += g / V[b[p]]
            A[b[p]] -= g * V[p] / V[b[p]]
        elif k == _NEG:
            A[a[p]] -= g
        elif k == _ABS:
            A[a[p]] += g * np.sign(V[a[p]])
        elif k == _SIN:
            A[a[p]] += g * np.cos(V[a[p]])
        elif k == _EXP:
            A[a[p]] += g * V[p]
        elif k == _SQRT:
            pos = V[p] > 0.0
            A[a[p]] += np.where(pos, 0.5 * g / np.where(pos, V[p], 1.0), 0.0)
        elif k == _SUM:
            for q in pool[a[p] : a[p] + b[p]]:
                A[q] += g
        elif k == _MIN2:
            first = V[a[p]] <= V[b[p]]
            A[a[p]] += np.where(first, g, 0.0)
            A[b[p]] += np.where(first, 0.0, g)
        elif k == _MAX2:
            first = V[a[p]] >= V[b[p]]
            A[a[p]] += np.where(first, g, 0.0)
            A[b[p]] += np.where(first, 0.0, g)
        elif k == _CLAMP:
            inside = (V[a[p]] >= x0[p]) & (V[a[p]] <= x1[p])
            A[a[p]] += np.where(inside, g, 0.0)
        elif k == _SELECT:
            taken = V[a[p]] != 0.0
            A[b[p]] += np.where(taken, g, 0.0)
            A[c[p]] += np.where(taken, 0.0, g)
        elif k == _DOT:
            n = b[p]
            xs = pool[a[p] : a[p] + n]
            ys = pool[a[p] + n : a[p] + 2 * n]
            for xq, yq in zip(xs, ys):
                A[xq] += g * V[yq]
                A[yq] += g * V[xq]
        # LT, CONSTANT, INPUT carry no gradient


def _check_finite(values):
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(np.flatnonzero(~finite.reshape(values.shape[0], -1).all(axis=1))[0])
        raise NonFiniteError(bad)


def forward(frozen: FrozenTape, inputs, check=False, out=None, workers=1):
    B, N, T = frozen.block_size, frozen.n_instances, frozen.tail_size
    total = frozen.n_nodes
    if out is None:
        out = np.empty(total, dtype=np.float64)
    V = np.empty((B, N), dtype=np.float64, order="C")
    S = frozen.inputs_per_instance
    with np.errstate(all="ignore"):
        if S:
            V[frozen.input_positions] = (
                np.asarray(inputs, dtype=np.float64).reshape(N, S).T
            )
        _sweep_rows(
            frozen.kind, frozen.a, frozen.b, frozen.c, frozen.x0, frozen.x1,
            frozen.pool, V,
        )
        out[: B * N] = V.T.reshape(-1)
        if T:
            _tail_forward(frozen, out)
    if check:
        _check_finite(out)
    return out


def _tail_forward(frozen, flat):
    base = frozen.block_size * frozen.n_instances
    kind, a, b, c = frozen.t_kind, frozen.t_a, frozen.t_b, frozen.t_c
    x0, x1, pool = frozen.t_x0, frozen.t_x1, frozen.t_pool
    for p in range(len(kind)):
        k = kind[p]
        n = base + p
        if k == _CONST:
            flat[n] = x0[p]
        elif k == _ADD:
            flat[n] = flat[a[p]] + flat[b[p]]
        elif k == _SUB:
            flat[n] = flat[a[p]] - flat[b[p]]
        elif k == _MUL:
            flat[n] = flat[a[p]] * flat[b[p]]
        elif k == _DIV:
            flat[n] = flat[a[p]] / flat[b[p]]
        elif k == _NEG:
            flat[n] = -flat[a[p]]
        elif k == _ABS:
            flat[n] = abs(flat[a[p]])
        elif k == _SIN:
            flat[n] = np.sin(flat[a[p]])
        elif k == _EXP:
            flat[n] = np.exp(flat[a[p]])
        elif k == _SQRT:
            flat[n] = np.sqrt(flat[a[p]])
        elif k == _SUM:
            acc = 0.0
            for q in pool[a[p] : a[p] + b[p]]:
                acc += flat[q]
            flat[n] = acc
        elif k == _MIN2:
            va, vb = flat[a[p]], flat[b[p]]
            flat[n] = va if va <= vb else vb
        elif k == _MAX2:
            va, vb = flat[a[p]], flat[b[p]]
            flat[n] = va if va >= vb else vb
        elif k == _CLAMP:
            v = flat[a[p]]
            flat[n] = x0[p] if v < x0[p] else (x1[p] if v > x1[p] else v)
        elif k == _SELECT:
            flat[n] = flat[b[p]] if flat[a[p]] != 0.0 else flat[c[p]]
        elif k == _DOT:
            m = b[p]
            acc = 0.0
            for i in range(m):
                acc += flat[pool[a[p] + i]] * flat[pool[a[p] + m + i]]
            flat[n] = acc
        elif k == _LT:
            flat[n] = 1.0 if flat[a[p]] < flat[b[p]] else 0.0


def backward(frozen: FrozenTape, values, seed, workers=1, out=None):
    B, N, T = frozen.block_size, frozen.n_instances, frozen.tail_size
    total = frozen.n_nodes
    if out is None:
        out = np.empty(total, dtype=np.float64)
    out[:] = 0.0
    out[seed] = 1.0
    with np.errstate(all="ignore"):
        if T:
            _tail_backward(frozen, values, out)
        # block-vectorized reverse sweep over position rows across instances
        V = np.ascontiguousarray(values[: B * N].reshape(N, B).T)
        A = np.ascontiguousarray(out[: B * N].reshape(N, B).T)
        _sweep_rows_backward(
            frozen.kind, frozen.a, frozen.b, frozen.c, frozen.x0, frozen.x1,
            frozen.pool, V, A,
        )
        out[: B * N] = A.T.reshape(-1)
    return out


def _tail_backward(frozen, values, adj):
    base = frozen.block_size * frozen.n_instances
    kind, a, b, c = frozen.t_kind, frozen.t_a, frozen.t_b, frozen.t_c
    x0, x1, pool = frozen.t_x0, frozen.t_x1, frozen.t_pool
    for p in range(len(kind) - 1, -1, -1):
        n = base + p
        g = adj[n]
        if g == 0.0:
            continue
        k = kind[p]
        if k == _ADD:
            adj[a[p]] += g
            adj[b[p]] += g
        elif k == _SUB:
            adj[a[p]] += g
            adj[b[p]] -= g
        elif k == _MUL:
            adj[a[p]] += g * values[b[p]]
            adj[b[p]] += g * values[a[p]]
        elif k == _DIV:
            adj[a[p]] += g / values[b[p]]
            adj[b[p]] -= g * values[n] / values[b[p]]
        elif k == _NEG:
            adj[a[p]] -= g
        elif k == _ABS:
            v = values[a[p]]
            adj[a[p]] += g * (1.0 if v > 0 else (-1.0 if v < 0 else 0.0))
        elif k == _SIN:
            adj[a[p]] += g * np.cos(values[a[p]])
        elif k == _EXP:
            adj[a[p]] += g * values[n]
        elif k == _SQRT:
            if values[n] > 0:
                adj[a[p]] += 0.5 * g / values[n]
        elif k == _SUM:
            for q in pool[a[p] : a[p] + b[p]]:
                adj[q] += g
        elif k == _MIN2:
            t = a[p] if values[a[p]] <= values[b[p]] else b[p]
            adj[t] += g
        elif k == _MAX2:
            t = a[p] if values[a[p]] >= values[b[p]] else b[p]
            adj[t] += g
        elif k == _CLAMP:
            v = values[a[p]]
            if x0[p] <= v <= x1[p]:
                adj[a[p]] += g
        elif k == _SELECT:
            t = b[p] if values[a[p]] != 0.0 else c[p]
            adj[t] += g
        elif k == _DOT:
            m = b[p]
            for i in range(m):
                xq, yq = pool[a[p] + i], pool[a[p] + m + i]
                adj[xq] += g * values[yq]
                adj[yq] += g * values[xq]


def forward_cols(frozen: FrozenTape, inputs, check=False):
    """Evaluate the full tape at many binding columns at once.

    ``inputs`` has shape (n_inputs, M); returns values of shape (n_nodes, M).
    Used by the finite-difference oracle driver; flat interpretation keeps
    the semantics identical to :func:`forward` column by column.
    """
    kind, a, b, c, x0, x1, pool = frozen.flatten()
    inputs = np.asarray(inputs, dtype=np.float64)
    M = inputs.shape[1]
    V = np.empty((frozen.n_nodes, M), dtype=np.float64)
    pos = np.flatnonzero(kind == _INPUT)
    with np.errstate(all="ignore"):
        V[pos] = inputs[a[pos]]
        _sweep_rows(kind, a, b, c, x0, x1, pool, V)
    if check:
        _check_finite(V)
    return V
