# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tape-sweep kernels: forward/backward over instance blocks,
tail sweeps with absolute addressing, and a multi-column forward used by
the finite-difference driver.  Opcode numbering mirrors gradplan.ir.Op;
the wrapper asserts OP_SIGNATURE against it at import time."""

from libc.math cimport sin, cos, exp, sqrt, fabs


cdef enum:
    K_CONSTANT = 0
    K_INPUT = 1
    K_ADD = 2
    K_SUB = 3
    K_MUL = 4
    K_DIV = 5
    K_NEG = 6
    K_ABS = 7
    K_SIN = 8
    K_EXP = 9
    K_SQRT = 10
    K_SUM = 11
    K_MIN2 = 12
    K_MAX2 = 13
    K_CLAMP = 14
    K_SELECT = 15
    K_DOT = 16
    K_LT = 17

OP_SIGNATURE = tuple(range(18))


def fwd_block(const unsigned char[::1] kind, const int[::1] a,
              const int[::1] b, const int[::1] c,
              const double[::1] x0, const double[::1] x1,
              const int[::1] pool, double[::1] values,
              Py_ssize_t block, Py_ssize_t i0, Py_ssize_t i1):
    """Evaluate instance copies [i0, i1) of the block in tape order."""
    cdef Py_ssize_t i, p, base, q, m, off
    cdef unsigned char k
    cdef double va, acc
    with nogil:
        for i in range(i0, i1):
            base = i * block
            for p in range(block):
                k = kind[p]
                if k == K_ADD:
                    values[base + p] = values[base + a[p]] + values[base + b[p]]
                elif k == K_MUL:
                    values[base + p] = values[base + a[p]] * values[base + b[p]]
                elif k == K_SUB:
                    values[base + p] = values[base + a[p]] - values[base + b[p]]
                elif k == K_SELECT:
                    if values[base + a[p]] != 0.0:
                        values[base + p] = values[base + b[p]]
                    else:
                        values[base + p] = values[base + c[p]]
                elif k == K_CLAMP:
                    va = values[base + a[p]]
                    if va < x0[p]:
                        values[base + p] = x0[p]
                    elif va > x1[p]:
                        values[base + p] = x1[p]
                    else:
                        values[base + p] = va
                elif k == K_ABS:
                    values[base + p] = fabs(values[base + a[p]])
                elif k == K_LT:
                    if values[base + a[p]] < values[base + b[p]]:
                        values[base + p] = 1.0
                    else:
                        values[base + p] = 0.0
                elif k == K_MIN2:
                    if values[base + a[p]] <= values[base + b[p]]:
                        values[base + p] = values[base + a[p]]
                    else:
                        values[base + p] = values[base + b[p]]
                elif k == K_MAX2:
                    if values[base + a[p]] >= values[base + b[p]]:
                        values[base + p] = values[base + a[p]]
                    else:
                        values[base + p] = values[base + b[p]]
                elif k == K_DIV:
                    values[base + p] = values[base + a[p]] / values[base + b[p]]
                elif k == K_NEG:
                    values[base + p] = -values[base + a[p]]
                elif k == K_SIN:
                    values[base + p] = sin(values[base + a[p]])
                elif k == K_EXP:
                    values[base + p] = exp(values[base + a[p]])
                elif k == K_SQRT:
                    values[base + p] = sqrt(values[base + a[p]])
                elif k == K_SUM:
                    acc = 0.0
                    off = a[p]
                    for q in range(b[p]):
                        acc += values[base + pool[off + q]]
                    values[base + p] = acc
                elif k == K_DOT:
                    acc = 0.0
                    off = a[p]
                    m = b[p]
                    for q in range(m):
                        acc += (values[base + pool[off + q]]
                                * values[base + pool[off + m + q]])
                    values[base + p] = acc
                elif k == K_CONSTANT:
                    values[base + p] = x0[p]
                # K_INPUT: bound by the caller


def bwd_block(const unsigned char[::1] kind, const int[::1] a,
              const int[::1] b, const int[::1] c,
              const double[::1] x0, const double[::1] x1,
              const int[::1] pool, const double[::1] values,
              double[::1] adj, Py_ssize_t block, Py_ssize_t i0, Py_ssize_t i1):
    """Reverse-accumulate adjoints through instance copies [i0, i1)."""
    cdef Py_ssize_t i, p, base, q, m, off
    cdef unsigned char k
    cdef double g, va
    with nogil:
        for i in range(i0, i1):
            base = i * block
            for p in range(block - 1, -1, -1):
                g = adj[base + p]
                if g == 0.0:
                    continue
                k = kind[p]
                if k == K_ADD:
                    adj[base + a[p]] += g
                    adj[base + b[p]] += g
                elif k == K_MUL:
                    adj[base + a[p]] += g * values[base + b[p]]
                    adj[base + b[p]] += g * values[base + a[p]]
                elif k == K_SUB:
                    adj[base + a[p]] += g
                    adj[base + b[p]] -= g
                elif k == K_SELECT:
                    if values[base + a[p]] != 0.0:
                        adj[base + b[p]] += g
                    else:
                        adj[base + c[p]] += g
                elif k == K_CLAMP:
                    va = values[base + a[p]]
                    if x0[p] <= va <= x1[p]:
                        adj[base + a[p]] += g
                elif k == K_ABS:
                    va = values[base + a[p]]
                    if va > 0.0:
                        adj[base + a[p]] += g
                    elif va < 0.0:
                        adj[base + a[p]] -= g
                elif k == K_MIN2:
                    if values[base + a[p]] <= values[base + b[p]]:
                        adj[base + a[p]] += g
                    else:
                        adj[base + b[p]] += g
                elif k == K_MAX2:
                    if values[base + a[p]] >= values[base + b[p]]:
                        adj[base + a[p]] += g
                    else:
                        adj[base + b[p]] += g
                elif k == K_DIV:
                    adj[base + a[p]] += g / values[base + b[p]]
                    adj[base + b[p]] -= (g * values[base + p]
                                         / values[base + b[p]])
                elif k == K_NEG:
                    adj[base + a[p]] -= g
                elif k == K_SIN:
                    adj[base + a[p]] += g * cos(values[base + a[p]])
                elif k == K_EXP:
                    adj[base + a[p]] += g * values[base + p]
                elif k == K_SQRT:
                    if values[base + p] > 0.0:
                        adj[base + a[p]] += 0.5 * g / values[base + p]
                elif k == K_SUM:
                    off = a[p]
                    for q in range(b[p]):
                        adj[base + pool[off + q]] += g
                elif k == K_DOT:
                    off = a[p]
                    m = b[p]
                    for q in range(m):
                        adj[base + pool[off + q]] += g * values[base + pool[off + m + q]]
                        adj[base + pool[off + m + q]] += g * values[base + pool[off + q]]
                # K_LT, K_CONSTANT, K_INPUT carry no gradient


def fwd_tail(const unsigned char[::1] kind, const int[::1] a,
             const int[::1] b, const int[::1] c,
             const double[::1] x0, const double[::1] x1,
             const int[::1] pool, double[::1] values, Py_ssize_t base):
    """Evaluate tail nodes (absolute operand ids) starting at id ``base``."""
    cdef Py_ssize_t p, q, m, off, n
    cdef unsigned char k
    cdef double va, acc
    with nogil:
        for p in range(kind.shape[0]):
            n = base + p
            k = kind[p]
            if k == K_ADD:
                values[n] = values[a[p]] + values[b[p]]
            elif k == K_MUL:
                values[n] = values[a[p]] * values[b[p]]
            elif k == K_SUB:
                values[n] = values[a[p]] - values[b[p]]
            elif k == K_DIV:
                values[n] = values[a[p]] / values[b[p]]
            elif k == K_NEG:
                values[n] = -values[a[p]]
            elif k == K_ABS:
                values[n] = fabs(values[a[p]])
            elif k == K_SIN:
                values[n] = sin(values[a[p]])
            elif k == K_EXP:
                values[n] = exp(values[a[p]])
            elif k == K_SQRT:
                values[n] = sqrt(values[a[p]])
            elif k == K_SUM:
                acc = 0.0
                off = a[p]
                for q in range(b[p]):
                    acc += values[pool[off + q]]
                values[n] = acc
            elif k == K_DOT:
                acc = 0.0
                off = a[p]
                m = b[p]
                for q in range(m):
                    acc += values[pool[off + q]] * values[pool[off + m + q]]
                values[n] = acc
            elif k == K_MIN2:
                if values[a[p]] <= values[b[p]]:
                    values[n] = values[a[p]]
                else:
                    values[n] = values[b[p]]
            elif k == K_MAX2:
                if values[a[p]] >= values[b[p]]:
                    values[n] = values[a[p]]
                else:
                    values[n] = values[b[p]]
            elif k == K_CLAMP:
                va = values[a[p]]
                if va < x0[p]:
                    values[n] = x0[p]
                elif va > x1[p]:
                    values[n] = x1[p]
                else:
                    values[n] = va
            elif k == K_SELECT:
                if values[a[p]] != 0.0:
                    values[n] = values[b[p]]
                else:
                    values[n] = values[c[p]]
            elif k == K_LT:
                if values[a[p]] < values[b[p]]:
                    values[n] = 1.0
                else:
                    values[n] = 0.0
            elif k == K_CONSTANT:
                values[n] = x0[p]


def bwd_tail(const unsigned char[::1] kind, const int[::1] a,
             const int[::1] b, const int[::1] c,
             const double[::1] x0, const double[::1] x1,
             const int[::1] pool, const double[::1] values,
             double[::1] adj, Py_ssize_t base):
    cdef Py_ssize_t p, q, m, off, n
    cdef unsigned char k
    cdef double g, va
    with nogil:
        for p in range(kind.shape[0] - 1, -1, -1):
            n = base + p
            g = adj[n]
            if g == 0.0:
                continue
            k = kind[p]
            if k == K_ADD:
                adj[a[p]] += g
                adj[b[p]] += g
            elif k == K_MUL:
                adj[a[p]] += g * values[b[p]]
                adj[b[p]] += g * values[a[p]]
            elif k == K_SUB:
                adj[a[p]] += g
                adj[b[p]] -= g
            elif k == K_DIV:
                adj[a[p]] += g / values[b[p]]
                adj[b[p]] -= g * values[n] / values[b[p]]
            elif k == K_NEG:
                adj[a[p]] -= g
            elif k == K_ABS:
                va = values[a[p]]
                if va > 0.0:
                    adj[a[p]] += g
                elif va < 0.0:
                    adj[a[p]] -= g
            elif k == K_SIN:
                adj[a[p]] += g * cos(values[a[p]])
            elif k == K_EXP:
                adj[a[p]] += g * values[n]
            elif k == K_SQRT:
                if values[n] > 0.0:
                    adj[a[p]] += 0.5 * g / values[n]
            elif k == K_SUM:
                off = a[p]
                for q in range(b[p]):
                    adj[pool[off + q]] += g
            elif k == K_DOT:
                off = a[p]
                m = b[p]
                for q in range(m):
                    adj[pool[off + q]] += g * values[pool[off + m + q]]
                    adj[pool[off + m + q]] += g * values[pool[off + q]]
            elif k == K_MIN2:
                if values[a[p]] <= values[b[p]]:
                    adj[a[p]] += g
                else:
                    adj[b[p]] += g
            elif k == K_MAX2:
                if values[a[p]] >= values[b[p]]:
                    adj[a[p]] += g
                else:
                    adj[b[p]] += g
            elif k == K_CLAMP:
                va = values[a[p]]
                if x0[p] <= va <= x1[p]:
                    adj[a[p]] += g
            elif k == K_SELECT:
                if values[a[p]] != 0.0:
                    adj[b[p]] += g
                else:
                    adj[c[p]] += g


def fwd_cols(const unsigned char[::1] kind, const int[::1] a,
             const int[::1] b, const int[::1] c,
             const double[::1] x0, const double[::1] x1,
             const int[::1] pool, double[:, ::1] V):
    """Evaluate a flat tape over M binding columns; V is (n_nodes, M)."""
    cdef Py_ssize_t p, m, q, j, count, off
    cdef Py_ssize_t M = V.shape[1]
    cdef unsigned char k
    cdef double va, acc
    with nogil:
        for p in range(kind.shape[0]):
            k = kind[p]
            if k == K_INPUT:
                continue
            elif k == K_ADD:
                for m in range(M):
                    V[p, m] = V[a[p], m] + V[b[p], m]
            elif k == K_MUL:
                for m in range(M):
                    V[p, m] = V[a[p], m] * V[b[p], m]
            elif k == K_SUB:
                for m in range(M):
                    V[p, m] = V[a[p], m] - V[b[p], m]
            elif k == K_DIV:
                for m in range(M):
                    V[p, m] = V[a[p], m] / V[b[p], m]
            elif k == K_NEG:
                for m in range(M):
                    V[p, m] = -V[a[p], m]
            elif k == K_ABS:
                for m in range(M):
                    V[p, m] = fabs(V[a[p], m])
            elif k == K_SIN:
                for m in range(M):
                    V[p, m] = sin(V[a[p], m])
            elif k == K_EXP:
                for m in range(M):
                    V[p, m] = exp(V[a[p], m])
            elif k == K_SQRT:
                for m in range(M):
                    V[p, m] = sqrt(V[a[p], m])
            elif k == K_SUM:
                off = a[p]
                count = b[p]
                for m in range(M):
                    acc = 0.0
                    for q in range(count):
                        acc += V[pool[off + q], m]
                    V[p, m] = acc
            elif k == K_DOT:
                off = a[p]
                count = b[p]
                for m in range(M):
                    acc = 0.0
                    for q in range(count):
                        acc += V[pool[off + q], m] * V[pool[off + count + q], m]
                    V[p, m] = acc
            elif k == K_MIN2:
                for m in range(M):
                    if V[a[p], m] <= V[b[p], m]:
                        V[p, m] = V[a[p], m]
                    else:
                        V[p, m] = V[b[p], m]
            elif k == K_MAX2:
                for m in range(M):
                    if V[a[p], m] >= V[b[p], m]:
                        V[p, m] = V[a[p], m]
                    else:
                        V[p, m] = V[b[p], m]
            elif k == K_CLAMP:
                for m in range(M):
                    va = V[a[p], m]
                    if va < x0[p]:
                        V[p, m] = x0[p]
                    elif va > x1[p]:
                        V[p, m] = x1[p]
                    else:
                        V[p, m] = va
            elif k == K_SELECT:
                for m in range(M):
                    if V[a[p], m] != 0.0:
                        V[p, m] = V[b[p], m]
                    else:
                        V[p, m] = V[c[p], m]
            elif k == K_LT:
                for m in range(M):
                    if V[a[p], m] < V[b[p], m]:
                        V[p, m] = 1.0
                    else:
                        V[p, m] = 0.0
            elif k == K_CONSTANT:
                for m in range(M):
                    V[p, m] = x0[p]
