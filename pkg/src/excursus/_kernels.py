"""Compiled kernels for the sparse Cholesky factor.

All matrices are compressed-column arrays ``(p, i, x)`` with sorted row
indices. The symmetric input ``C`` is the already permuted matrix; only its
upper triangle (rows ``<= k`` in column ``k``) is read.
"""

import numpy as np
from numba import njit

PIVOT_TOL = 1e-300


@njit(cache=True)
def etree(n, Cp, Ci):
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for q in range(Cp[k], Cp[k + 1]):
            i = Ci[q]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return parent


@njit(cache=True)
def _ereach(k, Cp, Ci, parent, stack, mark):
    # Row pattern of L(k, :) in topological order, returned as stack[top:n].
    n = parent.shape[0]
    top = n
    mark[k] = k
    for q in range(Cp[k], Cp[k + 1]):
        i = Ci[q]
        if i > k:
            continue
        length = 0
        while mark[i] != k:
            stack[length] = i
            length += 1
            mark[i] = k
            i = parent[i]
        while length > 0:
            top -= 1
            length -= 1
            stack[top] = stack[length]
    return top


@njit(cache=True)
def column_counts(n, Cp, Ci, parent):
    counts = np.ones(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        top = _ereach(k, Cp, Ci, parent, stack, mark)
        for t in range(top, n):
            counts[stack[t]] += 1
    return counts


@njit(cache=True)
def cholesky(n, Cp, Ci, Cx, parent, Lp):
    """Up-looking numeric factorization.

    Returns ``(Li, Lx, fail)`` where ``fail`` is the failing pivot index or
    ``-1`` on success.
    """
    nnz = Lp[n]
    Li = np.empty(nnz, dtype=np.int64)
    Lx = np.empty(nnz, dtype=np.float64)
    nxt = Lp[:n].copy()
    x = np.zeros(n, dtype=np.float64)
    stack = np.empty(n, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        top = _ereach(k, Cp, Ci, parent, stack, mark)
        for q in range(Cp[k], Cp[k + 1]):
            if Ci[q] <= k:
                x[Ci[q]] = Cx[q]
        d = x[k]
        x[k] = 0.0
        for t in range(top, n):
            i = stack[t]
            lki = x[i] / Lx[Lp[i]]
            x[i] = 0.0
            for q in range(Lp[i] + 1, nxt[i]):
                x[Li[q]] -= Lx[q] * lki
            d -= lki * lki
            q = nxt[i]
            nxt[i] += 1
            Li[q] = k
            Lx[q] = lki
        if not (d > PIVOT_TOL) or not np.isfinite(d):
            return Li, Lx, k
        q = nxt[k]
        nxt[k] += 1
        Li[q] = k
        Lx[q] = np.sqrt(d)
    return Li, Lx, -1


@njit(cache=True)
def lsolve(n, Lp, Li, Lx, B):
    # In place: B <- L^{-1} B, B has shape (n, m).
    m = B.shape[1]
    for j in range(n):
        djj = Lx[Lp[j]]
        for c in range(m):
            B[j, c] /= djj
        for q in range(Lp[j] + 1, Lp[j + 1]):
            r = Li[q]
            v = Lx[q]
            for c in range(m):
                B[r, c] -= v * B[j, c]


@njit(cache=True)
def ltsolve(n, Lp, Li, Lx, B):
    # In place: B <- L^{-T} B.
    m = B.shape[1]
    for j in range(n - 1, -1, -1):
        for q in range(Lp[j] + 1, Lp[j + 1]):
            r = Li[q]
            v = Lx[q]
            for c in range(m):
                B[j, c] -= v * B[r, c]
        djj = Lx[Lp[j]]
        for c in range(m):
            B[j, c] /= djj


@njit(cache=True)
def _lookup(Lp, Li, col, row):
    lo = Lp[col]
    hi = Lp[col + 1] - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        r = Li[mid]
        if r == row:
            return mid
        if r < row:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1


@njit(cache=True)
def selected_inverse(n, Lp, Li, Lx):
    """Entries of Q^{-1} on the pattern of L (Takahashi recursion).

    The returned array is aligned with ``Li``; the diagonal of column ``j``
    sits at ``Lp[j]``.
    """
    S = np.zeros(Lp[n], dtype=np.float64)
    for i in range(n - 1, -1, -1):
        lii = Lx[Lp[i]]
        start = Lp[i] + 1
        end = Lp[i + 1]
        for qj in range(start, end):
            j = Li[qj]
            acc = 0.0
            for qk in range(start, end):
                k = Li[qk]
                if k == j:
                    skj = S[Lp[j]]
                elif k > j:
                    skj = S[_lookup(Lp, Li, j, k)]
                else:
                    skj = S[_lookup(Lp, Li, k, j)]
                acc += Lx[qk] * skj
            S[qj] = -acc / lii
        acc = 0.0
        for qk in range(start, end):
            acc += Lx[qk] * S[qk]
        S[Lp[i]] = (1.0 / lii - acc) / lii
    return S
