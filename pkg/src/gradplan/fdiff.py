"""Central finite-difference gradient oracle.

Independent of the tape's backward sweep: it only ever calls the supplied
evaluator at probe points, so it can vouch for reverse-mode gradients.
"""

from __future__ import annotations

import numpy as np

from .errors import OracleError


def finite_difference_gradient(f, point, h: float, batched: bool = False):
    """Central-difference estimate of df/dx at ``point``, step ``h``.

    ``f`` maps a flat float vector to a scalar.  With ``batched=True`` it
    instead maps an (n, M) matrix of probe columns to an (M,) vector, which
    lets tape-backed evaluators amortize the 2n probes per call.
    """
    if not h > 0:
        raise OracleError(f"probe step must be positive, got {h}")
    point = np.asarray(point, dtype=np.float64).reshape(-1)
    n = point.size
    if batched:
        probes = np.repeat(point[:, None], 2 * n, axis=1)
        idx = np.arange(n)
        probes[idx, 2 * idx] += h
        probes[idx, 2 * idx + 1] -= h
        vals = np.asarray(f(probes), dtype=np.float64).reshape(-1)
        if vals.size != 2 * n:
            raise OracleError(
                f"batched evaluator returned {vals.size} values for {2 * n} probes"
            )
        if not np.isfinite(vals).all():
            raise OracleError("non-finite evaluation at a probe point")
        return (vals[0::2] - vals[1::2]) / (2.0 * h)
    grad = np.empty(n, dtype=np.float64)
    for k in range(n):
        up = point.copy()
        up[k] += h
        down = point.copy()
        down[k] -= h
        fu, fd = float(f(up)), float(f(down))
        if not (np.isfinite(fu) and np.isfinite(fd)):
            raise OracleError(f"non-finite evaluation at coordinate {k}")
        grad[k] = (fu - fd) / (2.0 * h)
    return grad
