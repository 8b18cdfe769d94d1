"""Sparse Cholesky factorization, triangular solves, sampling and orderings.

Conventions
-----------
A permutation ``p`` lists original node indices in factor order, so that
``(P Q P^T)[k, l] = Q[p[k], p[l]]`` and ``P Q P^T = L L^T``. The sequential
integrator walks the factor backwards (index ``d - 1`` first), hence the
processing order of nodes is ``p[::-1]``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .model import NotPositiveDefiniteError, SampleEnsemble, SparsePrecision

DENSE_INVERSE_MAX_DIM = 64
SAMPLE_CHUNK = 8192


class Permutation:
    """Bijection on ``range(d)`` stored as its forward index array."""

    __slots__ = ("p",)

    def __init__(self, p):
        p = np.array(p, dtype=np.int64).reshape(-1)
        if not np.array_equal(np.sort(p), np.arange(p.size)):
            raise ValueError("not a permutation of 0..d-1")
        p.flags.writeable = False
        self.p = p

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(np.arange(d))

    def __len__(self):
        return self.p.size

    def __array__(self, dtype=None, copy=None):
        return self.p if dtype is None else self.p.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.p, other.p)

    def __repr__(self):
        return f"Permutation({self.p.tolist()})"

    @property
    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.p)
        inv[self.p] = np.arange(self.p.size)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """``self.p[other.p]``: apply ``other`` in the index space of ``self``."""
        return Permutation(self.p[other.p])


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``P Q P^T = L L^T``.

    ``L`` is held as sorted compressed-column arrays with the diagonal first
    in every column; the scipy view ``L`` is built on request.
    """

    perm: Permutation
    Lp: np.ndarray
    Li: np.ndarray
    Lx: np.ndarray

    @property
    def dim(self) -> int:
        return self.Lp.size - 1

    @property
    def nnz(self) -> int:
        return int(self.Lp[-1])

    @property
    def L(self) -> sp.csc_matrix:
        d = self.dim
        return sp.csc_matrix((self.Lx, self.Li, self.Lp), shape=(d, d))

    @property
    def diag(self) -> np.ndarray:
        return self.Lx[self.Lp[:-1]]

    @property
    def processing_order(self) -> np.ndarray:
        return self.perm.p[::-1].copy()


def _permuted_csc(Q: SparsePrecision, perm: np.ndarray) -> sp.csc_matrix:
    C = Q.csc[perm][:, perm].tocsc()
    C.sort_indices()
    return C


def factorize(Q: SparsePrecision, perm=None) -> CholeskyFactor:
    """Sparse Cholesky of ``P Q P^T`` with an elimination-tree symbolic pass."""
    d = Q.dim
    perm = Permutation.identity(d) if perm is None else _as_perm(perm)
    if len(perm) != d:
        raise ValueError(f"permutation has length {len(perm)}, matrix has dimension {d}")
    C = _permuted_csc(Q, perm.p)
    Cp = C.indptr.astype(np.int64)
    Ci = C.indices.astype(np.int64)
    Cx = C.data.astype(np.float64)
    parent = _kernels.etree(d, Cp, Ci)
    counts = _kernels.column_counts(d, Cp, Ci, parent)
    Lp = np.zeros(d + 1, dtype=np.int64)
    np.cumsum(counts, out=Lp[1:])
    Li, Lx, fail = _kernels.cholesky(d, Cp, Ci, Cx, parent, Lp)
    if fail >= 0:
        raise NotPositiveDefiniteError(int(fail), int(perm.p[fail]))
    for a in (Lp, Li, Lx):
        a.flags.writeable = False
    return CholeskyFactor(perm, Lp, Li, Lx)


def _as_perm(perm) -> Permutation:
    return perm if isinstance(perm, Permutation) else Permutation(perm)


def _rhs(factor: CholeskyFactor, rhs) -> tuple[np.ndarray, bool]:
    B = np.array(rhs, dtype=np.float64)
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != factor.dim:
        raise ValueError(
            f"right-hand side has {B.shape[0] if B.ndim else 0} rows, factor has {factor.dim}"
        )
    return np.ascontiguousarray(B), vector


def solve_lower(factor: CholeskyFactor, rhs) -> np.ndarray:
    """Solve ``L x = rhs`` in factor (permuted) index space."""
    B, vector = _rhs(factor, rhs)
    _kernels.lsolve(factor.dim, factor.Lp, factor.Li, factor.Lx, B)
    return B[:, 0] if vector else B


def solve_upper(factor: CholeskyFactor, rhs) -> np.ndarray:
    """Solve ``L^T x = rhs`` in factor (permuted) index space."""
    B, vector = _rhs(factor, rhs)
    _kernels.ltsolve(factor.dim, factor.Lp, factor.Li, factor.Lx, B)
    return B[:, 0] if vector else B


def solve(factor: CholeskyFactor, rhs) -> np.ndarray:
    """Solve ``Q x = rhs`` in original node order."""
    p = factor.perm.p
    B, vector = _rhs(factor, rhs)
    y = solve_upper(factor, solve_lower(factor, B[p]))
    x = np.empty_like(y)
    x[p] = y
    return x[:, 0] if vector else x


def sample_field(factor: CholeskyFactor, mu, n: int, seed: int) -> SampleEnsemble:
    """Draw ``n`` realizations of ``N(mu, Q^{-1})`` as ``mu + P^T L^{-T} z``.

    Normals come from SFC64 streams keyed by ``(seed, chunk)`` with a fixed
    chunk size, so the ensemble depends only on ``seed`` and ``n``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    d = factor.dim
    if mu.shape != (d,):
        raise ValueError("mu does not match the factor dimension")
    if n < 1:
        raise ValueError("need at least one sample")
    p = factor.perm.p
    out = np.empty((d, n))
    for c, start in enumerate(range(0, n, SAMPLE_CHUNK)):
        m = min(SAMPLE_CHUNK, n - start)
        rng = np.random.Generator(np.random.SFC64(np.random.SeedSequence(seed, spawn_key=(c,))))
        # sample-major draws: realization k uses the same normals for any n > k
        Z = np.ascontiguousarray(rng.standard_normal((m, d)).T)
        _kernels.ltsolve(d, factor.Lp, factor.Li, factor.Lx, Z)
        out[p, start:start + m] = Z
    out += mu[:, None]
    return SampleEnsemble(out)


def selected_inverse_diag(factor: CholeskyFactor) -> np.ndarray:
    """Diagonal of ``Q^{-1}`` in original node order."""
    S = _kernels.selected_inverse(factor.dim, factor.Lp, factor.Li, factor.Lx)
    out = np.empty(factor.dim)
    out[factor.perm.p] = S[factor.Lp[:-1]]
    return out


def marginal_variances(Q: SparsePrecision) -> np.ndarray:
    if Q.dim <= DENSE_INVERSE_MAX_DIM:
        A = Q.toarray()
        try:
            c = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            # rerun sparse to locate the failing pivot
            factorize(Q)
            raise
        Linv = np.linalg.inv(c)
        return np.einsum("ij,ij->j", Linv, Linv)
    return selected_inverse_diag(factorize(Q, minimum_degree_ordering(Q)))


def _adjacency(Q: SparsePrecision) -> list[set]:
    A = Q.csc
    adj = []
    for j in range(Q.dim):
        rows = A.indices[A.indptr[j]:A.indptr[j + 1]]
        adj.append(set(int(r) for r in rows if r != j))
    return adj


def constrained_ordering(pattern: SparsePrecision, groups) -> Permutation:
    """Minimum-degree ordering whose group labels are non-decreasing.

    Groups are eliminated block by block in ascending label order. Inside a
    block the node of smallest current degree in the elimination graph goes
    next (ties to the lower index); fill created by earlier blocks carries
    over into the graph seen by later ones.
    """
    labels = np.asarray(groups, dtype=np.int64).reshape(-1)
    d = pattern.dim
    if labels.size != d:
        raise ValueError("need one group label per node")
    if d and labels.min() < 0:
        raise ValueError("group labels must be non-negative")
    adj = _adjacency(pattern)
    alive = np.ones(d, dtype=bool)
    order = []
    for g in np.unique(labels):
        members = np.flatnonzero(labels == g)
        heap = [(len(adj[v]), int(v)) for v in members]
        heapq.heapify(heap)
        while heap:
            deg, v = heapq.heappop(heap)
            if not alive[v] or deg != len(adj[v]):
                continue
            alive[v] = False
            order.append(v)
            nbrs = adj[v]
            for a in nbrs:
                adj[a].discard(v)
                adj[a] |= nbrs
                adj[a].discard(a)
            adj[v] = set()
            for a in nbrs:
                if labels[a] == g:
                    heapq.heappush(heap, (len(adj[a]), a))
    return Permutation(order)


def minimum_degree_ordering(pattern: SparsePrecision) -> Permutation:
    return constrained_ordering(pattern, np.zeros(pattern.dim, dtype=np.int64))


def symbolic_nnz(pattern: SparsePrecision, perm) -> int:
    """Number of nonzeros in ``L`` for ``P Q P^T`` without a numeric pass."""
    perm = _as_perm(perm)
    C = _permuted_csc(pattern, perm.p)
    Cp = C.indptr.astype(np.int64)
    Ci = C.indices.astype(np.int64)
    parent = _kernels.etree(pattern.dim, Cp, Ci)
    return int(_kernels.column_counts(pattern.dim, Cp, Ci, parent).sum())
