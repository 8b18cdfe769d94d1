"""Excursion functions, excursion sets and contour avoidance/credibility.

Nodes are sorted by their marginal probability of satisfying the requested
constraint; the excursion function at the node in position ``t`` is the
joint probability that the constraints of the first ``t`` nodes hold. The
``1 - alpha`` superlevel set of that function is the excursion set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .gaussint import DEFAULT_SAMPLES, IntegralLimits, gaussint
from .model import ExcursionSpec, GaussianField, SampleEnsemble, marginal_excursion_prob
from .normal import norm_cdf, norm_isf
from .sparse import constrained_ordering


# rho = 0 would put the limit at infinity; 40 sd is already massless
_Z_CAP = 40.0


class PreconditionError(ValueError):
    """Inputs are individually valid but cannot be combined as requested."""


@dataclass(frozen=True)
class Grouped:
    """Bucketed ordering: ``rho`` is quantized into ``n_buckets`` groups and
    a fill-reducing order is chosen inside each group."""

    n_buckets: int

    def __post_init__(self):
        if self.n_buckets < 1:
            raise ValueError("n_buckets must be positive")


Strategy = Union[str, Grouped]


def parse_strategy(text: str) -> Strategy:
    if text == "strict":
        return "strict"
    if text.startswith("grouped"):
        _, _, n = text.partition(":")
        return Grouped(int(n) if n else 10)
    raise ValueError(f"unknown ordering strategy {text!r}")


def in_set(F: np.ndarray, alpha: float) -> np.ndarray:
    """Set-membership predicate shared by every engine: ``F >= 1 - alpha``.

    The inclusive comparison is deliberate; not-computed (NaN) entries are
    never members.
    """
    with np.errstate(invalid="ignore"):
        return np.asarray(F) >= 1.0 - alpha


@dataclass(frozen=True, eq=False)
class ExcursionResult:
    """Excursion (or contour) function over the nodes.

    ``F`` and ``F_se`` are in node order with NaN marking nodes past the
    point where computation stopped. ``order`` lists nodes in processing
    sequence. For contour kinds ``sign`` holds ``'+'`` or ``'-'`` per node.
    """

    F: np.ndarray
    F_se: np.ndarray
    order: np.ndarray
    rho: np.ndarray
    E_set: np.ndarray
    sign: Optional[np.ndarray]
    spec: ExcursionSpec
    seed: Optional[int]
    n_samples: int
    mean: Optional[np.ndarray] = None

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def computed(self) -> np.ndarray:
        return ~np.isnan(self.F)

    def excursion_set(self, alpha: float) -> np.ndarray:
        """Node indices of the set at error probability ``alpha``."""
        if alpha > self.spec.F_limit:
            raise PreconditionError(
                f"alpha={alpha} exceeds F_limit={self.spec.F_limit}; recompute with a larger F_limit"
            )
        if self.spec.kind == "=":
            # credibility region = complement of the avoiding set
            return np.flatnonzero(~in_set(1.0 - self.F, alpha))
        return np.flatnonzero(in_set(self.F, alpha))


def _check_alpha(spec: ExcursionSpec):
    if spec.alpha > spec.F_limit:
        raise PreconditionError(
            f"alpha={spec.alpha} exceeds F_limit={spec.F_limit}; the set would be "
            "truncated, use F_limit >= alpha"
        )


def _descending(rho: np.ndarray) -> np.ndarray:
    # ties broken by ascending node index
    return np.lexsort((np.arange(rho.size), -rho))


def _truncate(F_proc: np.ndarray, F_limit: float) -> np.ndarray:
    below = np.flatnonzero(F_proc < 1.0 - F_limit)
    out = F_proc.copy()
    if below.size:
        out[below[0] + 1:] = np.nan
    return out


def _signed_setup(field: GaussianField, spec: ExcursionSpec):
    """Per-node limits, marginal probabilities and signs for a Gaussian field."""
    d = field.dim
    mu, sd, u = field.mu, field.sd, spec.u
    if spec.method == "QC":
        if spec.rho_override is None:
            raise PreconditionError("method 'QC' requires rho_override")
        if spec.rho_override.size != d:
            raise ValueError(f"rho_override has length {spec.rho_override.size}, field has {d}")
    lower = np.full(d, -np.inf)
    upper = np.full(d, np.inf)
    sign = None
    if spec.kind == ">":
        if spec.method == "QC":
            rho = spec.rho_override.copy()
            lower[:] = mu + sd * np.minimum(norm_isf(rho), _Z_CAP)
        else:
            rho = marginal_excursion_prob(field, u, ">")
            lower[:] = u
    elif spec.kind == "<":
        if spec.method == "QC":
            rho = spec.rho_override.copy()
            upper[:] = mu - sd * np.minimum(norm_isf(rho), _Z_CAP)
        else:
            rho = marginal_excursion_prob(field, u, "<")
            upper[:] = u
    else:
        if spec.method == "QC":
            rho_gt = spec.rho_override
            rho_lt = 1.0 - rho_gt
            level = mu + sd * norm_isf(rho_gt)
        else:
            z = (mu - u) / sd
            rho_gt, rho_lt = norm_cdf(z), norm_cdf(-z)
            level = np.full(d, float(u))
        pos = rho_gt >= rho_lt
        sign = np.where(pos, "+", "-")
        rho = np.where(pos, rho_gt, rho_lt)
        lower[pos] = level[pos]
        upper[~pos] = level[~pos]
    return rho, lower, upper, sign


def _processing_order(field: GaussianField, rho: np.ndarray, strategy: Strategy) -> np.ndarray:
    if strategy == "strict":
        return _descending(rho)
    if isinstance(strategy, Grouped):
        n = strategy.n_buckets
        labels = np.minimum((rho * n).astype(np.int64), n - 1)
        # factor order runs opposite to processing order, so high-rho buckets
        # carry the largest labels
        perm = constrained_ordering(field.Q, labels)
        return perm.p[::-1].copy()
    raise ValueError(f"unknown ordering strategy {strategy!r}")


def excursions(
    field: GaussianField,
    spec: ExcursionSpec,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    strategy: Strategy = "strict",
    threads: Optional[int] = None,
) -> ExcursionResult:
    """Excursion or contour function of a Gaussian field.

    ``spec.method == 'QC'`` shifts each node's integration limit so the
    Gaussian marginal reproduces ``spec.rho_override``. For ``'>'`` and the
    contour kinds the override holds ``P(x_i > u)``; for ``'<'`` it holds
    ``P(x_i < u)``.
    """
    _check_alpha(spec)
    d = field.dim
    rho, lower, upper, sign = _signed_setup(field, spec)
    order = _processing_order(field, rho, strategy)
    F = np.full(d, np.nan)
    F_se = np.full(d, np.nan)
    if d == 1:
        F[:] = rho
        F_se[:] = 0.0
    else:
        res = gaussint(
            field.mu, field.Q, IntegralLimits(lower, upper), order=order,
            n_samples=n_samples, alpha_stop=spec.F_limit, seed=seed, threads=threads,
        )
        Fp = _truncate(res.Pv, spec.F_limit)
        F[order] = Fp
        F_se[order] = np.where(np.isnan(Fp), np.nan, res.Ev)
    return _finish(F, F_se, order, rho, sign, spec, seed, n_samples, field.mu)


def _finish(F, F_se, order, rho, sign, spec, seed, n_samples, mean):
    if spec.kind == "=":
        F = 1.0 - F
    result = ExcursionResult(
        F=F, F_se=F_se, order=order, rho=rho, E_set=np.empty(0, dtype=np.int64),
        sign=sign, spec=spec, seed=seed, n_samples=n_samples, mean=mean,
    )
    object.__setattr__(result, "E_set", result.excursion_set(spec.alpha))
    return result


def excursions_mc(ensemble: SampleEnsemble, spec: ExcursionSpec) -> ExcursionResult:
    """Excursion function estimated purely from Monte Carlo realizations.

    Marginal probabilities are empirical frequencies and ``F`` at position
    ``t`` is the fraction of samples meeting the first ``t`` constraints.
    """
    _check_alpha(spec)
    X = ensemble.values
    N = X.shape[1]
    u = spec.u
    above = X > u
    below = X < u
    sign = None
    if spec.kind == ">":
        ok = above
    elif spec.kind == "<":
        ok = below
    else:
        pos = above.mean(axis=1) >= below.mean(axis=1)
        sign = np.where(pos, "+", "-")
        ok = np.where(pos[:, None], above, below)
    rho = ok.mean(axis=1)
    order = _descending(rho)
    joint = np.logical_and.accumulate(ok[order], axis=0)
    Fp = _truncate(joint.sum(axis=1) / N, spec.F_limit)
    F = np.empty_like(Fp)
    F[order] = Fp
    F_se = np.sqrt(F * (1.0 - F) / N)
    return _finish(F, F_se, order, rho, sign, spec, None, N, X.mean(axis=1))

