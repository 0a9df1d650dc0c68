"""Primitive helpers usable on tape symbols and on plain numbers alike.

Domain transition/reward builders are written once against these functions;
passed :class:`~gradplan.tape.Sym` operands they record tape nodes, passed
floats/arrays they compute numerically with the same kink conventions as the
tape kernels (see :mod:`gradplan.tape`).  The numeric route powers heuristic
baselines and cross-checks of the symbolic graphs.
"""

from __future__ import annotations

import functools
import operator

import numpy as np

from .ir import Op
from .tape import Sym, Tape


def _sym(*xs):
    for x in xs:
        if isinstance(x, Sym):
            return x
    return None


def _lift(tape: Tape, x) -> Sym:
    return x if isinstance(x, Sym) else tape.constant(float(x))


def sin(x):
    if isinstance(x, Sym):
        return Sym(x.tape, x.tape.record(Op.SIN, (x.id,)))
    return np.sin(x)


def exp(x):
    if isinstance(x, Sym):
        return Sym(x.tape, x.tape.record(Op.EXP, (x.id,)))
    return np.exp(x)


def sqrt(x):
    if isinstance(x, Sym):
        return Sym(x.tape, x.tape.record(Op.SQRT, (x.id,)))
    return np.sqrt(x)


def absolute(x):
    if isinstance(x, Sym):
        return abs(x)
    return np.abs(x)


def minimum(x, y):
    s = _sym(x, y)
    if s is None:
        return np.minimum(x, y)
    t = s.tape
    return Sym(t, t.record(Op.MIN2, (_lift(t, x).id, _lift(t, y).id)))


def maximum(x, y):
    s = _sym(x, y)
    if s is None:
        return np.maximum(x, y)
    t = s.tape
    return Sym(t, t.record(Op.MAX2, (_lift(t, x).id, _lift(t, y).id)))


def clamp(x, lo: float, hi: float):
    """Saturate x to [lo, hi]; constant bounds only."""
    if isinstance(x, Sym):
        return Sym(x.tape, x.tape.record(Op.CLAMP, (x.id,), (float(lo), float(hi))))
    return np.minimum(np.maximum(x, lo), hi)


def less(x, y):
    """Indicator of x < y as 1.0/0.0; carries no gradient."""
    s = _sym(x, y)
    if s is None:
        return np.where(np.less(x, y), 1.0, 0.0)
    t = s.tape
    return Sym(t, t.record(Op.LT, (_lift(t, x).id, _lift(t, y).id)))


def select(cond, a, b):
    """a where cond is nonzero, else b; the condition is non-differentiable."""
    s = _sym(cond, a, b)
    if s is None:
        return np.where(np.asarray(cond) != 0, a, b)
    t = s.tape
    return Sym(
        t,
        t.record(
            Op.SELECT, (_lift(t, cond).id, _lift(t, a).id, _lift(t, b).id)
        ),
    )


def nsum(xs):
    """Sum of a sequence; one n-ary tape node on the symbolic route."""
    xs = list(xs)
    if not xs:
        raise ValueError("nsum needs at least one term")
    s = _sym(*xs)
    if s is None:
        return functools.reduce(operator.add, xs)
    t = s.tape
    return Sym(t, t.record(Op.SUM, tuple(_lift(t, x).id for x in xs)))


def dot(xs, ys):
    """Inner product of two equal-length sequences."""
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        raise ValueError(f"dot length mismatch: {len(xs)} vs {len(ys)}")
    s = _sym(*xs, *ys)
    if s is None:
        return functools.reduce(
            operator.add, (x * y for x, y in zip(xs, ys))
        )
    t = s.tape
    ids = tuple(_lift(t, x).id for x in xs) + tuple(_lift(t, y).id for y in ys)
    return Sym(t, t.record(Op.DOT, ids))
