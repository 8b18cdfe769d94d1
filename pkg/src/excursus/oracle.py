"""Brute-force references: plain Monte Carlo with dense linear algebra.

Nothing here touches the sparse factor or the sequential sampler, and the
random numbers come from PCG64 (the integrator uses Philox), so agreement
between the two is a genuine cross-check.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

_CHUNK = 50_000


def dense_samples(mu, Q_dense, n: int, seed: int) -> np.ndarray:
    """``n`` draws of ``N(mu, Q^{-1})`` as a d x n array.

    With ``Q = R^T R`` (upper Cholesky) the draw is ``mu + R^{-1} z``.
    """
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    Q = np.asarray(Q_dense, dtype=np.float64)
    R = sla.cholesky(Q, lower=False)
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal((mu.size, n))
    return mu[:, None] + sla.solve_triangular(R, z, lower=False)


def dense_box_probability(mu, Q_dense, a, b, n: int, seed: int = 0):
    """Fraction of ``n`` exact draws strictly inside the box ``(a, b)``.

    Returns ``(estimate, binomial standard error)``.
    """
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    a = np.asarray(a, dtype=np.float64).reshape(-1, 1)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 1)
    Q = np.asarray(Q_dense, dtype=np.float64)
    R = sla.cholesky(Q, lower=False)
    rng = np.random.Generator(np.random.PCG64(seed))
    hits = 0
    for start in range(0, n, _CHUNK):
        m = min(_CHUNK, n - start)
        x = mu[:, None] + sla.solve_triangular(R, rng.standard_normal((mu.size, m)), lower=False)
        hits += int(np.count_nonzero(np.all((x > a) & (x < b), axis=0)))
    p = hits / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


def oracle_F(samples, order, limits) -> np.ndarray:
    """``F[t]``: fraction of samples meeting the first ``t + 1`` constraints.

    ``samples`` is d x N; ``limits`` is ``(a, b)`` in node order and a node
    passes when ``a_i < x_i < b_i``. The result is indexed by position in
    ``order``.
    """
    X = np.asarray(samples, dtype=np.float64)
    order = np.asarray(order)
    a = np.asarray(limits[0], dtype=np.float64).reshape(-1)
    b = np.asarray(limits[1], dtype=np.float64).reshape(-1)
    ok = (X[order] > a[order, None]) & (X[order] < b[order, None])
    return np.logical_and.accumulate(ok, axis=0).sum(axis=1) / X.shape[1]
