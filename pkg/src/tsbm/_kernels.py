"""Compiled inner loops of the greedy search.

Block tables are indexed ``[k, g, t]`` where ``t`` runs over the time axis the
likelihood is factorised on: intervals for model A, time-cluster slots for
model B. ``mult[t]`` is the number of intervals behind slot ``t`` (all ones for
model A, with ``uniform`` set so the log terms collapse onto block totals).

The per-cell log marginal used everywhere is, up to the constant log(Y!) sum,

    f(S, x) = lgamma(S + a) - lgamma(a) + a log b - (S + a) log(x + b)

with ``x`` the exposure (pair count times interval multiplicity). It is exactly
zero when ``S = x = 0``, so empty blocks need no special casing.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _cell(s, x, a, b, lga, alogb):
    return math.lgamma(s + a) - lga + alogb - (s + a) * math.log(x + b)


@njit(cache=True)
def _shift(Spq, v1, s1, v2, s2, n_old, n_new, mult, uniform, a, b, lga, alogb):
    """Change of a block's log marginal when its counts move by ``s1*v1 + s2*v2``
    and its pair count goes from ``n_old`` to ``n_new``."""
    T = Spq.shape[0]
    out = 0.0
    if uniform:
        tot_old = 0.0
        tot_new = 0.0
        for t in range(T):
            s = Spq[t]
            d = s1 * v1[t] + s2 * v2[t]
            if d != 0:
                out += math.lgamma(s + d + a) - math.lgamma(s + a)
            tot_old += s
            tot_new += s + d
        out += (tot_old + a * T) * math.log(n_old + b) - (tot_new + a * T) * math.log(n_new + b)
    else:
        for t in range(T):
            mt = mult[t]
            if mt == 0:
                continue
            s = Spq[t]
            d = s1 * v1[t] + s2 * v2[t]
            out += _cell(s + d, n_new * mt, a, b, lga, alogb)
            out -= _cell(s, n_old * mt, a, b, lga, alogb)
    return out


@njit(cache=True)
def _block_value(Spq, n, mult, uniform, a, b, lga, alogb):
    T = Spq.shape[0]
    out = 0.0
    if n == 0:
        return 0.0
    if uniform:
        tot = 0.0
        for t in range(T):
            s = Spq[t]
            if s != 0:
                out += math.lgamma(s + a) - lga
            tot += s
        out += T * alogb - (tot + a * T) * math.log(n + b)
    else:
        for t in range(T):
            if mult[t] != 0:
                out += _cell(Spq[t], n * mult[t], a, b, lga, alogb)
    return out


@njit(cache=True)
def block_values(S, sizes, active, mult, uniform, a, b):
    """Log marginal of every active block, ``F[k, g]`` over slot indices."""
    lga = math.lgamma(a)
    alogb = a * math.log(b)
    K = S.shape[0]
    F = np.zeros((K, K))
    for p in active:
        for q in active:
            npq = sizes[p] * sizes[q] - (sizes[p] if p == q else 0)
            F[p, q] = _block_value(S[p, q], npq, mult, uniform, a, b, lga, alogb)
    return F


@njit(cache=True)
def node_move_deltas(S, sizes, active, mult, uniform, r, c, k, a, b):
    """Likelihood change for moving one node out of cluster ``k`` into each active slot.

    ``r[g, t]`` / ``c[g, t]`` are the node's counts towards / from cluster ``g``.
    Entry for ``l == k`` is left at 0.
    """
    lga = math.lgamma(a)
    alogb = a * math.log(b)
    nA = active.shape[0]
    zero = np.zeros(S.shape[2], dtype=S.dtype)
    nk = sizes[k]
    # blocks in row/col k against untouched clusters do not depend on the target
    h_row = np.zeros(nA)
    h_col = np.zeros(nA)
    for gi in range(nA):
        g = active[gi]
        if g == k:
            continue
        ng = sizes[g]
        h_row[gi] = _shift(S[k, g], r[g], -1, zero, 0, nk * ng, (nk - 1) * ng,
                           mult, uniform, a, b, lga, alogb)
        h_col[gi] = _shift(S[g, k], c[g], -1, zero, 0, ng * nk, ng * (nk - 1),
                           mult, uniform, a, b, lga, alogb)
    H = h_row.sum() + h_col.sum()
    out = np.zeros(nA)
    for li in range(nA):
        l = active[li]
        if l == k:
            continue
        nl = sizes[l]
        acc = H - h_row[li] - h_col[li]
        for gi in range(nA):
            g = active[gi]
            if g == k or g == l:
                continue
            ng = sizes[g]
            acc += _shift(S[l, g], r[g], 1, zero, 0, nl * ng, (nl + 1) * ng,
                          mult, uniform, a, b, lga, alogb)
            acc += _shift(S[g, l], c[g], 1, zero, 0, ng * nl, ng * (nl + 1),
                          mult, uniform, a, b, lga, alogb)
        acc += _shift(S[k, k], r[k], -1, c[k], -1, nk * (nk - 1), (nk - 1) * (nk - 2),
                      mult, uniform, a, b, lga, alogb)
        acc += _shift(S[k, l], r[l], -1, c[k], 1, nk * nl, (nk - 1) * (nl + 1),
                      mult, uniform, a, b, lga, alogb)
        acc += _shift(S[l, k], c[l], -1, r[k], 1, nl * nk, (nl + 1) * (nk - 1),
                      mult, uniform, a, b, lga, alogb)
        acc += _shift(S[l, l], r[l], 1, c[l], 1, nl * (nl - 1), (nl + 1) * nl,
                      mult, uniform, a, b, lga, alogb)
        out[li] = acc
    return out


@njit(cache=True)
def node_merge_deltas(S, F, sizes, active, mult, uniform, a, b):
    """Likelihood change of every cluster merge; ``out[i, j]`` merges active[i] into active[j].

    ``F`` holds current block values. Only the upper triangle is filled.
    """
    lga = math.lgamma(a)
    alogb = a * math.log(b)
    nA = active.shape[0]
    T = S.shape[2]
    buf = np.zeros(T, dtype=S.dtype)
    out = np.full((nA, nA), -np.inf)
    for ki in range(nA):
        k = active[ki]
        for li in range(ki + 1, nA):
            l = active[li]
            nm = sizes[k] + sizes[l]
            acc = 0.0
            for g in active:
                if g == k or g == l:
                    continue
                ng = sizes[g]
                for t in range(T):
                    buf[t] = S[k, g, t] + S[l, g, t]
                acc += _block_value(buf, nm * ng, mult, uniform, a, b, lga, alogb)
                acc -= F[k, g] + F[l, g]
                for t in range(T):
                    buf[t] = S[g, k, t] + S[g, l, t]
                acc += _block_value(buf, ng * nm, mult, uniform, a, b, lga, alogb)
                acc -= F[g, k] + F[g, l]
            for t in range(T):
                buf[t] = S[k, k, t] + S[k, l, t] + S[l, k, t] + S[l, l, t]
            acc += _block_value(buf, nm * (nm - 1), mult, uniform, a, b, lga, alogb)
            acc -= F[k, k] + F[k, l] + F[l, k] + F[l, l]
            out[ki, li] = acc
    return out


@njit(cache=True)
def interval_move_deltas(Sd, Su_u, sizes, active, dactive, mult, d, a, b):
    """Likelihood change for moving one interval (counts ``Su_u[k, g]``) from slot ``d``
    to every active time slot. Entry for ``d`` itself is left at 0."""
    lga = math.lgamma(a)
    alogb = a * math.log(b)
    nD = dactive.shape[0]
    out = np.zeros(nD)
    md = mult[d]
    leave = 0.0
    for p in active:
        for q in active:
            npq = sizes[p] * sizes[q] - (sizes[p] if p == q else 0)
            s = Su_u[p, q]
            leave += _cell(Sd[p, q, d] - s, npq * (md - 1), a, b, lga, alogb)
            leave -= _cell(Sd[p, q, d], npq * md, a, b, lga, alogb)
    for di in range(nD):
        e = dactive[di]
        if e == d:
            continue
        me = mult[e]
        acc = leave
        for p in active:
            for q in active:
                npq = sizes[p] * sizes[q] - (sizes[p] if p == q else 0)
                acc += _cell(Sd[p, q, e] + Su_u[p, q], npq * (me + 1), a, b, lga, alogb)
                acc -= _cell(Sd[p, q, e], npq * me, a, b, lga, alogb)
        out[di] = acc
    return out


@njit(cache=True)
def interval_merge_deltas(Sd, sizes, active, dactive, mult, a, b):
    """Likelihood change of every time-cluster merge (upper triangle)."""
    lga = math.lgamma(a)
    alogb = a * math.log(b)
    nD = dactive.shape[0]
    out = np.full((nD, nD), -np.inf)
    for di in range(nD):
        d = dactive[di]
        for ei in range(di + 1, nD):
            e = dactive[ei]
            m = mult[d] + mult[e]
            acc = 0.0
            for p in active:
                for q in active:
                    npq = sizes[p] * sizes[q] - (sizes[p] if p == q else 0)
                    acc += _cell(Sd[p, q, d] + Sd[p, q, e], npq * m, a, b, lga, alogb)
                    acc -= _cell(Sd[p, q, d], npq * mult[d], a, b, lga, alogb)
                    acc -= _cell(Sd[p, q, e], npq * mult[e], a, b, lga, alogb)
            out[di, ei] = acc
    return out


@njit(cache=True)
def aggregate_time(X, y, n_slots):
    """Sum the last axis of ``X`` (rows x U) into time slots given by ``y``."""
    out = np.zeros((X.shape[0], n_slots), dtype=X.dtype)
    for g in range(X.shape[0]):
        for u in range(X.shape[1]):
            out[g, y[u]] += X[g, u]
    return out


@njit(cache=True)
def move_node(Y, Su, Rout, Rin, i, k, l):
    """Move node ``i`` from ``k`` to ``l`` in a per-interval block table and the
    node-to-cluster aggregates. Works for counts and log-factorial tables alike."""
    K = Su.shape[0]
    U = Su.shape[2]
    N = Y.shape[0]
    for g in range(K):
        for u in range(U):
            rv = Rout[i, g, u]
            cv = Rin[i, g, u]
            Su[k, g, u] -= rv
            Su[l, g, u] += rv
            Su[g, k, u] -= cv
            Su[g, l, u] += cv
    # Su[k,k] and Su[l,l] receive the row and the column update in sequence,
    # matching the remove-then-insert bookkeeping.
    for j in range(N):
        for u in range(U):
            Rout[j, k, u] -= Y[j, i, u]
            Rout[j, l, u] += Y[j, i, u]
            Rin[j, k, u] -= Y[i, j, u]
            Rin[j, l, u] += Y[i, j, u]
