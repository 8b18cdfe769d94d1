"""Field specifications and marginal quantities.

Three ways of describing the random vector are supported: a Gaussian field
given by mean and sparse precision, a finite Gaussian mixture of such
fields, and a plain ensemble of Monte Carlo realizations.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .normal import norm_cdf

KINDS = (">", "<", "!=", "=")
METHODS = ("EB", "QC")


class NotPositiveDefiniteError(ArithmeticError):
    """Raised when a Cholesky pivot is non-positive or not finite."""

    def __init__(self, index: int, node: Optional[int] = None):
        self.index = index
        self.node = index if node is None else node
        super().__init__(
            f"matrix is not positive definite (pivot {index}, node {self.node})"
        )


class SparsePrecision:
    """Symmetric positive-definite precision matrix in compressed-column form.

    The full symmetric pattern is stored. Construction rejects any entry
    ``(i, j)`` whose mirror ``(j, i)`` is missing or differs in value, so
    exact symmetry holds for every instance.
    """

    __slots__ = ("_csc",)

    def __init__(self, matrix):
        A = sp.csc_matrix(matrix, dtype=np.float64, copy=True)
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ValueError(f"precision matrix must be square, got {A.shape}")
        A.sum_duplicates()
        A.sort_indices()
        if not np.all(np.isfinite(A.data)):
            raise ValueError("precision matrix has non-finite entries")
        At = A.T.tocsc()
        At.sort_indices()
        if not (
            np.array_equal(A.indptr, At.indptr)
            and np.array_equal(A.indices, At.indices)
            and np.array_equal(A.data.view(np.uint64), At.data.view(np.uint64))
        ):
            raise ValueError("precision matrix is not symmetric")
        diag = _stored_diagonal(A)
        if np.any(np.isnan(diag)) or np.any(diag <= 0):
            raise ValueError("precision diagonal must be present and positive")
        A.indices = A.indices.astype(np.int64)
        A.indptr = A.indptr.astype(np.int64)
        A.data.flags.writeable = False
        self._csc = A

    @classmethod
    def from_triplets(cls, rows, cols, values, dim: int) -> "SparsePrecision":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and (rows.min() < 0 or cols.min() < 0
                          or rows.max() >= dim or cols.max() >= dim):
            raise ValueError("triplet index out of range")
        return cls(sp.coo_matrix((values, (rows, cols)), shape=(dim, dim)))

    @property
    def dim(self) -> int:
        return self._csc.shape[0]

    @property
    def csc(self) -> sp.csc_matrix:
        """The underlying matrix. Treat as read-only."""
        return self._csc

    @property
    def nnz(self) -> int:
        return self._csc.nnz

    def diagonal(self) -> np.ndarray:
        return self._csc.diagonal()

    def toarray(self) -> np.ndarray:
        return self._csc.toarray()

    def permute(self, perm) -> "SparsePrecision":
        """Return ``P Q P^T``, i.e. entry ``(k, l)`` is ``Q[perm[k], perm[l]]``."""
        p = np.asarray(perm)
        return SparsePrecision(self._csc[p][:, p])

    def __repr__(self):
        return f"SparsePrecision(dim={self.dim}, nnz={self.nnz})"


def _stored_diagonal(A: sp.csc_matrix) -> np.ndarray:
    diag = np.full(A.shape[0], np.nan)
    for j in range(A.shape[0]):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        hit = np.searchsorted(A.indices[lo:hi], j)
        if hit < hi - lo and A.indices[lo + hit] == j:
            diag[j] = A.data[lo + hit]
    return diag


def _as_precision(Q) -> SparsePrecision:
    return Q if isinstance(Q, SparsePrecision) else SparsePrecision(Q)


def _frozen_vector(values, name: str) -> np.ndarray:
    v = np.array(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    v.flags.writeable = False
    return v


@dataclass(frozen=True, eq=False)
class GaussianField:
    """Gaussian vector with mean ``mu`` and sparse precision ``Q``.

    Marginal standard deviations are computed on first access of ``sd`` and
    cached. The computation runs at most once per instance.
    """

    mu: np.ndarray
    Q: SparsePrecision
    _sd: Optional[np.ndarray] = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __init__(self, mu, Q, sd=None):
        Q = _as_precision(Q)
        mu = _frozen_vector(mu, "mu")
        if mu.size != Q.dim:
            raise ValueError(f"mu has length {mu.size}, Q has dimension {Q.dim}")
        if sd is not None:
            sd = _frozen_vector(sd, "sd")
            if sd.size != Q.dim or np.any(sd <= 0):
                raise ValueError("sd must have length d and positive entries")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "_sd", sd)
        object.__setattr__(self, "_lock", threading.Lock())

    @property
    def dim(self) -> int:
        return self.Q.dim

    @property
    def sd(self) -> np.ndarray:
        if self._sd is None:
            with self._lock:
                if self._sd is None:
                    from .sparse import marginal_variances

                    sd = np.sqrt(marginal_variances(self.Q))
                    sd.flags.writeable = False
                    object.__setattr__(self, "_sd", sd)
        return self._sd


@dataclass(frozen=True, eq=False)
class MixtureField:
    weights: np.ndarray
    components: tuple

    def __init__(self, weights, components: Sequence[GaussianField]):
        w = _frozen_vector(weights, "weights")
        components = tuple(components)
        if w.size != len(components) or w.size == 0:
            raise ValueError("need one weight per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise ValueError("mixture components differ in dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", components)

    @property
    def dim(self) -> int:
        return self.components[0].dim


@dataclass(frozen=True, eq=False)
class SampleEnsemble:
    """``d x N`` matrix of realizations, one column per sample."""

    values: np.ndarray

    def __init__(self, values):
        X = np.array(values, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("ensemble must be a non-empty d x N matrix")
        if not np.all(np.isfinite(X)):
            raise ValueError("ensemble values must be finite")
        X.flags.writeable = False
        object.__setattr__(self, "values", X)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ExcursionSpec:
    u: float
    kind: str = ">"
    alpha: float = 0.1
    method: str = "EB"
    F_limit: float = 1.0
    rho_override: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not np.isfinite(self.u):
            raise ValueError("level u must be finite")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.F_limit <= 1:
            raise ValueError("F_limit must lie in (0, 1]")
        if self.rho_override is not None:
            rho = np.array(self.rho_override, dtype=np.float64).reshape(-1)
            if np.any(~(rho >= 0) | ~(rho <= 1)):
                raise ValueError("rho_override entries must lie in [0, 1]")
            rho.flags.writeable = False
            object.__setattr__(self, "rho_override", rho)


def marginal_sd(field: GaussianField) -> np.ndarray:
    return field.sd


def marginal_excursion_prob(field: GaussianField, u: float, kind: str = ">") -> np.ndarray:
    """Pointwise ``P(x_i > u)`` for ``'>'`` and ``P(x_i < u)`` for ``'<'``.

    Contour kinds return the ``'>'`` probabilities; the engine derives the
    other side as the complement.
    """
    z = (field.mu - u) / field.sd
    if kind == "<":
        return norm_cdf(-z)
    if kind in (">", "!=", "="):
        return norm_cdf(z)
    raise ValueError(f"unknown kind {kind!r}")
