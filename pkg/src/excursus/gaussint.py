"""Sequential importance sampling for Gaussian box probabilities.

The box probability ``P(a < x < b)`` for ``x ~ N(mu, Q^{-1})`` is written as
a product of conditional one-dimensional masses along a processing order.
Every sample walks the order once: the next coordinate's conditional law is
read off the Cholesky factor, its mass inside ``(a_i, b_i)`` multiplies the
running weight, and the coordinate is drawn from the truncated conditional.
The mean running weight after ``t`` coordinates estimates the probability
that the first ``t`` constraints hold jointly, so the whole nested sequence
costs the same as the final integral.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import SparsePrecision
from .normal import truncated_mass, truncated_standard_draw
from .sparse import CholeskyFactor, Permutation, factorize, minimum_degree_ordering

DEFAULT_SAMPLES = 100_000
CHUNK = 8192
BLOCK = 16
_U_FLOOR = 2.0 ** -60


@dataclass(frozen=True, eq=False)
class IntegralLimits:
    a: np.ndarray
    b: np.ndarray

    def __init__(self, a, b):
        a = np.array(a, dtype=np.float64).reshape(-1)
        b = np.array(b, dtype=np.float64).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("limits a and b differ in length")
        if np.any(np.isnan(a)) or np.any(np.isnan(b)):
            raise ValueError("integration limits contain NaN")
        if np.any(a >= b):
            bad = int(np.flatnonzero(a >= b)[0])
            raise ValueError(f"degenerate integration limits at node {bad}: a >= b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def unbounded(cls, d: int) -> "IntegralLimits":
        return cls(np.full(d, -np.inf), np.full(d, np.inf))

    def __len__(self):
        return self.a.size


@dataclass(frozen=True, eq=False)
class IntegralResult:
    """Estimate of a Gaussian box probability and its nested partials.

    ``Pv[t]`` estimates the probability that the constraints of the first
    ``t + 1`` nodes in ``order`` hold jointly; entries past ``n_processed``
    are NaN (not computed). ``zero_position`` is set when every sample had
    zero weight at that position; all later partials are then exactly 0.
    """

    P: float
    E: float
    Pv: np.ndarray
    Ev: np.ndarray
    n_processed: int
    order: np.ndarray
    n_samples: int
    seed: int
    zero_position: Optional[int] = None

    @property
    def stopped_early(self) -> bool:
        return self.n_processed < self.Pv.size


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        threads = int(os.environ.get("EXCURSUS_THREADS", "1") or 1)
    return max(1, int(threads))


class _Plan:
    """Per-factor bookkeeping shared read-only by all sample chunks."""

    def __init__(self, factor: CholeskyFactor, lower: np.ndarray, upper: np.ndarray):
        d = factor.dim
        Lp, Li, Lx = factor.Lp, factor.Li, factor.Lx
        self.d = d
        self.diag = Lx[Lp[:-1]]
        self.lower = lower
        self.upper = upper
        # y_j is read by every column k < j with L[j, k] != 0; it can be
        # dropped once the smallest such column has been processed.
        last_use = np.arange(d)
        for k in range(d):
            rows = Li[Lp[k] + 1:Lp[k + 1]]
            np.minimum.at(last_use, rows, k)
        release = [[] for _ in range(d)]
        for j in np.flatnonzero(last_use < np.arange(d)):
            release[last_use[j]].append(j)
        slot = np.full(d, -1, dtype=np.int64)
        free: list[int] = []
        n_slots = 0
        for k in range(d - 1, -1, -1):
            for j in release[k]:
                free.append(int(slot[j]))
            if last_use[k] < k:
                if free:
                    slot[k] = free.pop()
                else:
                    slot[k] = n_slots
                    n_slots += 1
        self.slot = slot
        self.n_slots = n_slots
        self.col_slots = []
        self.col_vals = []
        for k in range(d):
            rows = Li[Lp[k] + 1:Lp[k + 1]]
            self.col_slots.append(slot[rows])
            self.col_vals.append(np.ascontiguousarray(Lx[Lp[k] + 1:Lp[k + 1]]))


class _Chunk:
    def __init__(self, plan: _Plan, seed: int, index: int, size: int):
        self.plan = plan
        self.size = size
        ss = np.random.SeedSequence(seed, spawn_key=(index,))
        self.rng = np.random.Generator(np.random.Philox(ss))
        self.Y = np.empty((plan.n_slots, size))
        self.prod = np.ones(size)

    def advance(self, t0: int, t1: int):
        plan = self.plan
        sums = np.empty(t1 - t0)
        m2 = np.empty(t1 - t0)
        for t in range(t0, t1):
            k = plan.d - 1 - t
            lkk = plan.diag[k]
            slots = plan.col_slots[k]
            if slots.size:
                m = -(plan.col_vals[k] @ self.Y[slots]) / lkk
            else:
                m = 0.0
            alpha = (plan.lower[k] - m) * lkk
            beta = (plan.upper[k] - m) * lkk
            if plan.slot[k] >= 0:
                u = np.maximum(self.rng.random(self.size), _U_FLOOR)
                z, w = truncated_standard_draw(alpha, beta, u)
                self.Y[plan.slot[k]] = m + z / lkk
            else:
                # no later coordinate conditions on this one
                w = np.broadcast_to(truncated_mass(alpha, beta), (self.size,))
            self.prod *= w
            s = np.sum(self.prod)
            sums[t - t0] = s
            dev = self.prod - s / self.size
            m2[t - t0] = np.dot(dev, dev)
        return sums, m2


def _resolve_factor(Q_or_factor, order, d):
    if isinstance(Q_or_factor, CholeskyFactor):
        factor = Q_or_factor
        if order is not None and not np.array_equal(np.asarray(order), factor.processing_order):
            raise ValueError("order is inconsistent with the supplied factor")
        return factor
    Q = Q_or_factor if isinstance(Q_or_factor, SparsePrecision) else SparsePrecision(Q_or_factor)
    if Q.dim != d:
        raise ValueError(f"Q has dimension {Q.dim}, mu has length {d}")
    if order is None:
        perm = minimum_degree_ordering(Q)
    else:
        perm = Permutation(np.asarray(order)[::-1])
    return factorize(Q, perm)


def gaussint(
    mu,
    Q_or_factor,
    limits,
    order=None,
    n_samples: int = DEFAULT_SAMPLES,
    alpha_stop: float = 1.0,
    seed: int = 0,
    threads: Optional[int] = None,
) -> IntegralResult:
    """Estimate ``P(a < x < b)`` for ``x ~ N(mu, Q^{-1})``.

    Parameters
    ----------
    mu : array_like
        Mean vector of length d.
    Q_or_factor : SparsePrecision, sparse/dense matrix, or CholeskyFactor
        Precision matrix, or a factor whose permutation already encodes the
        processing order.
    limits : IntegralLimits or (a, b)
        Lower and upper limits; infinite values are allowed.
    order : array_like, optional
        Node indices in processing sequence (``order[0]`` is integrated
        outermost). Defaults to the factor's order, or a minimum-degree
        order when only ``Q`` is given.
    n_samples : int
        Number of importance samples.
    alpha_stop : float
        Stop at the first position where ``Pv + Ev < 1 - alpha_stop``.
        ``1`` disables early stopping.
    seed : int
        Seed of the counter-based sample streams.
    threads : int, optional
        Worker threads. Never changes the result.

    Returns
    -------
    IntegralResult
    """
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    d = mu.size
    if not isinstance(limits, IntegralLimits):
        limits = IntegralLimits(*limits)
    if len(limits) != d:
        raise ValueError(f"limits have length {len(limits)}, mu has length {d}")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if not 0 < alpha_stop <= 1:
        raise ValueError("alpha_stop must lie in (0, 1]")
    factor = _resolve_factor(Q_or_factor, order, d)
    p = factor.perm.p
    plan = _Plan(factor, limits.a[p] - mu[p], limits.b[p] - mu[p])

    sizes = [min(CHUNK, n_samples - s) for s in range(0, n_samples, CHUNK)]
    chunks = [_Chunk(plan, seed, c, m) for c, m in enumerate(sizes)]
    n = float(n_samples)
    threshold = 1.0 - alpha_stop
    Pv = np.full(d, np.nan)
    Ev = np.full(d, np.nan)
    n_processed = d
    zero_position = None
    n_threads = min(resolve_threads(threads), len(chunks))
    pool = ThreadPoolExecutor(n_threads) if n_threads > 1 else None
    try:
        for t0 in range(0, d, BLOCK):
            t1 = min(t0 + BLOCK, d)
            if pool is None:
                parts = [ch.advance(t0, t1) for ch in chunks]
            else:
                parts = list(pool.map(lambda ch: ch.advance(t0, t1), chunks))
            total = np.zeros(t1 - t0)
            m2 = np.zeros(t1 - t0)
            count = 0
            for (s, q), size in zip(parts, sizes):
                # Chan et al. pairwise update of the centred sum of squares
                if count:
                    delta = s / size - total / count
                    m2 = m2 + q + delta * delta * count * size / (count + size)
                else:
                    m2 = m2 + q
                total = total + s
                count += size
            Pv[t0:t1] = total / n
            Ev[t0:t1] = np.sqrt(np.maximum(m2, 0.0) / (n - 1.0)) / np.sqrt(n)
            stop = np.flatnonzero(Pv[t0:t1] + Ev[t0:t1] < threshold)
            zeros = np.flatnonzero(total == 0.0)
            if zeros.size and (not stop.size or zeros[0] <= stop[0]):
                zero_position = t0 + int(zeros[0])
            if stop.size:
                n_processed = t0 + int(stop[0]) + 1
                Pv[n_processed:] = np.nan
                Ev[n_processed:] = np.nan
                break
            if zero_position is not None:
                Pv[zero_position:] = 0.0
                Ev[zero_position:] = 0.0
                break
    finally:
        if pool is not None:
            pool.shutdown()
    last = n_processed - 1
    return IntegralResult(
        P=float(Pv[last]),
        E=float(Ev[last]),
        Pv=Pv,
        Ev=Ev,
        n_processed=n_processed,
        order=factor.processing_order,
        n_samples=int(n_samples),
        seed=int(seed),
        zero_position=zero_position,
    )
