"""Compiled inner loops for the scalar message engine and point relaxation.

Edge layout shared by every kernel: the message sent from node ``j`` to node
``i`` lives at edge slot ``e`` with ``recv[e] == i`` and ``send[e] == j``;
``aval[e]`` is ``A[i, j]`` and ``arev[e]`` is ``A[j, i]`` (zero when that
entry is structurally absent).  ``rev[e]`` is the slot of the opposite
message ``i -> j`` or -1.  Incoming slots of node ``i`` are
``in_ptr[i]:in_ptr[i+1]`` (they are contiguous); outgoing slots of node ``j``
are ``out_edges[out_ptr[j]:out_ptr[j+1]]``.

Kernels return -1 on success, or the node at which a pivot fell below the
floor.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def gabp_sequential(order, in_ptr, aval, arev, rev, out_ptr, out_edges,
                    diag, b, lam, msg, x, floor, update_lam, sigma, s_out):
    """In-place sweep; ``s_out[j]`` receives the precision used at node ``j``."""
    for t in range(order.size):
        j = order[t]
        m = b[j]
        if update_lam:
            s = diag[j]
            for e in range(in_ptr[j], in_ptr[j + 1]):
                m += msg[e]
                s += lam[e] * arev[e]
        else:
            s = sigma[j]
            for e in range(in_ptr[j], in_ptr[j + 1]):
                m += msg[e]
        s_out[j] = s
        if abs(s) < floor:
            return j
        x[j] = m / s
        for k in range(out_ptr[j], out_ptr[j + 1]):
            q = out_edges[k]
            r = rev[q]
            if update_lam:
                den = s
                if r >= 0:
                    den -= lam[r] * aval[q]
                if abs(den) < floor:
                    return j
                lam[q] = -aval[q] / den
            if r >= 0:
                msg[q] = lam[q] * (m - msg[r])
            else:
                msg[q] = lam[q] * m
    return -1


@njit(cache=True)
def gabp_flood(n, in_ptr, aval, arev, rev, out_ptr, out_edges,
               diag, b, lam, msg, new_lam, new_msg, x, floor, update_lam, sigma):
    """One synchronous sweep: all new messages from the old snapshot, then x."""
    for j in range(n):
        m = b[j]
        if update_lam:
            s = diag[j]
            for e in range(in_ptr[j], in_ptr[j + 1]):
                m += msg[e]
                s += lam[e] * arev[e]
        else:
            s = sigma[j]
            for e in range(in_ptr[j], in_ptr[j + 1]):
                m += msg[e]
        for k in range(out_ptr[j], out_ptr[j + 1]):
            q = out_edges[k]
            r = rev[q]
            if update_lam:
                den = s
                if r >= 0:
                    den -= lam[r] * aval[q]
                if abs(den) < floor:
                    return j
                new_lam[q] = -aval[q] / den
            else:
                new_lam[q] = lam[q]
            if r >= 0:
                new_msg[q] = new_lam[q] * (m - msg[r])
            else:
                new_msg[q] = new_lam[q] * m
    for i in range(n):
        m = b[i]
        if update_lam:
            s = diag[i]
            for e in range(in_ptr[i], in_ptr[i + 1]):
                m += new_msg[e]
                s += new_lam[e] * arev[e]
        else:
            s = sigma[i]
            for e in range(in_ptr[i], in_ptr[i + 1]):
                m += new_msg[e]
        if abs(s) < floor:
            return i
        x[i] = m / s
    return -1


@njit(cache=True)
def node_precisions(n, in_ptr, arev, diag, lam, out):
    for i in range(n):
        s = diag[i]
        for e in range(in_ptr[i], in_ptr[i + 1]):
            s += lam[e] * arev[e]
        out[i] = s


@njit(cache=True)
def gauss_seidel(order, indptr, indices, data, diag, b, x, sweeps):
    """In-place point Gauss-Seidel visiting rows in ``order``."""
    for _ in range(sweeps):
        for t in range(order.size):
            i = order[t]
            acc = b[i]
            for p in range(indptr[i], indptr[i + 1]):
                c = indices[p]
                if c != i:
                    acc -= data[p] * x[c]
            x[i] = acc / diag[i]


@njit(cache=True)
def tridiag_solve_invdiag(lower, diag, upper, rhs, x, dinv, work):
    """Solve a tridiagonal system and return the diagonal of its inverse.

    ``lower[i]`` couples row ``i + 1`` to ``i`` and ``upper[i]`` row ``i``
    to ``i + 1``.  Forward pivots ``d`` and backward pivots ``e`` give
    ``1 / inv[i, i] = d[i] + e[i] - diag[i]``.  Returns False on a zero pivot.
    """
    n = diag.size
    d = work[0]
    e = work[1]
    y = work[2]
    d[0] = diag[0]
    y[0] = rhs[0]
    for i in range(1, n):
        if d[i - 1] == 0.0:
            return False
        f = lower[i - 1] / d[i - 1]
        d[i] = diag[i] - f * upper[i - 1]
        y[i] = rhs[i] - f * y[i - 1]
    if d[n - 1] == 0.0:
        return False
    x[n - 1] = y[n - 1] / d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] - upper[i] * x[i + 1]) / d[i]
    e[n - 1] = diag[n - 1]
    for i in range(n - 2, -1, -1):
        if e[i + 1] == 0.0:
            return False
        e[i] = diag[i] - upper[i] * lower[i] / e[i + 1]
    for i in range(n):
        s = d[i] + e[i] - diag[i]
        if s == 0.0:
            return False
        dinv[i] = 1.0 / s
    return True
