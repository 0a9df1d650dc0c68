"""Wrapper over the Cython kernels in :mod:`gradplan._core`.

Instance blocks are disjoint node ranges, so multi-worker evaluation just
shards instances across a thread pool (the kernels release the GIL); results
are bitwise identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import _core
from ..errors import NonFiniteError
from ..ir import FrozenTape, Op

if _core.OP_SIGNATURE != tuple(int(o) for o in Op):
    raise ImportError("gradplan._core opcode layout does not match gradplan.ir")

name = "compiled"


def _chunks(n: int, workers: int):
    workers = max(1, min(workers, n))
    step = -(-n // workers)
    return [(i, min(i + step, n)) for i in range(0, n, step)]


def _check_finite(values):
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(np.flatnonzero(~finite.reshape(values.shape[0], -1).all(axis=1))[0])
        raise NonFiniteError(bad)


def forward(frozen: FrozenTape, inputs, check=False, out=None, workers=1):
    B, N, T = frozen.block_size, frozen.n_instances, frozen.tail_size
    if out is None:
        out = np.empty(frozen.n_nodes, dtype=np.float64)
    if frozen.inputs_per_instance:
        out[frozen.flat_input_positions()] = np.asarray(
            inputs, dtype=np.float64
        ).reshape(-1)
    args = (
        frozen.kind, frozen.a, frozen.b, frozen.c,
        frozen.x0, frozen.x1, frozen.pool, out, B,
    )
    if workers > 1 and N > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_core.fwd_block, *args, i0, i1)
                    for i0, i1 in _chunks(N, workers)]
            for f in futs:
                f.result()
    else:
        _core.fwd_block(*args, 0, N)
    if T:
        _core.fwd_tail(
            frozen.t_kind, frozen.t_a, frozen.t_b, frozen.t_c,
            frozen.t_x0, frozen.t_x1, frozen.t_pool, out, B * N,
        )
    if check:
        _check_finite(out)
    return out


def backward(frozen: FrozenTape, values, seed, workers=1, out=None):
    B, N, T = frozen.block_size, frozen.n_instances, frozen.tail_size
    if out is None:
        out = np.empty(frozen.n_nodes, dtype=np.float64)
    out[:] = 0.0
    out[seed] = 1.0
    if T:
        _core.bwd_tail(
            frozen.t_kind, frozen.t_a, frozen.t_b, frozen.t_c,
            frozen.t_x0, frozen.t_x1, frozen.t_pool, values, out, B * N,
        )
    args = (
        frozen.kind, frozen.a, frozen.b, frozen.c,
        frozen.x0, frozen.x1, frozen.pool, values, out, B,
    )
    if workers > 1 and N > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_core.bwd_block, *args, i0, i1)
                    for i0, i1 in _chunks(N, workers)]
            for f in futs:
                f.result()
    else:
        _core.bwd_block(*args, 0, N)
    return out


def forward_cols(frozen: FrozenTape, inputs, check=False):
    kind, a, b, c, x0, x1, pool = frozen.flatten()
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    V = np.empty((frozen.n_nodes, inputs.shape[1]), dtype=np.float64)
    pos = np.flatnonzero(kind == int(Op.INPUT))
    V[pos] = inputs[a[pos]]
    _core.fwd_cols(kind, a, b, c, x0, x1, pool, V)
    if check:
        _check_finite(V)
    return V
