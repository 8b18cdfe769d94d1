"""Simultaneous confidence bands.

The band at quantile level ``rho`` runs between the pointwise ``rho`` and
``1 - rho`` quantiles. Its joint coverage decreases in ``rho``; bisection
finds the ``rho`` at which the coverage equals ``1 - alpha``. Every coverage
evaluation reuses the same seed, so the estimated coverage curve is a
deterministic, monotone-in-expectation function along the search path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .gaussint import DEFAULT_SAMPLES, gaussint
from .model import GaussianField, MixtureField, SampleEnsemble
from .normal import norm_cdf, norm_ppf
from .sparse import factorize, minimum_degree_ordering

DEFAULT_TOL = 1e-3
BRACKET_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BandResult:
    """Simultaneous band ``[a, b]`` and pointwise band at level ``alpha / 2``.

    ``coverage``/``coverage_se`` estimate the joint probability of the
    simultaneous band. ``marginal_is_simultaneous`` flags the case where the
    pointwise band already reaches the target and no search was done.
    """

    a: np.ndarray
    b: np.ndarray
    a_marginal: np.ndarray
    b_marginal: np.ndarray
    rho: float
    coverage: float
    coverage_se: float
    alpha: float
    marginal_is_simultaneous: bool = False
    n_evaluations: int = 0


def _gauss_band(mu, sd, rho):
    z = norm_ppf(rho)
    return mu + sd * z, mu - sd * z


def _bisect(coverage: Callable[[float], tuple], alpha: float, tol: float):
    """Search ``rho`` in ``(0, alpha/2]`` for coverage ``1 - alpha``.

    Returns ``(rho, coverage, se, flagged, n_evaluations)``.
    """
    target = 1.0 - alpha
    hi = alpha / 2.0
    g, e = coverage(hi)
    n_eval = 1
    if abs(g - target) <= tol:
        return hi, g, e, False, n_eval
    if g > target:
        return hi, g, e, True, n_eval
    lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        g, e = coverage(mid)
        n_eval += 1
        if abs(g - target) <= tol:
            break
        if g > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < BRACKET_TOL:
            break
    return mid, g, e, False, n_eval


def simconf(
    field: GaussianField,
    alpha: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    threads: Optional[int] = None,
) -> BandResult:
    _check_alpha(alpha)
    mu, sd = field.mu, field.sd
    factor = factorize(field.Q, minimum_degree_ordering(field.Q))

    def coverage(rho):
        r = gaussint(mu, factor, _gauss_band(mu, sd, rho), n_samples=n_samples,
                     seed=seed, threads=threads)
        return r.P, r.E

    rho, g, e, flagged, n_eval = _bisect(coverage, alpha, tol)
    a, b = _gauss_band(mu, sd, rho)
    am, bm = _gauss_band(mu, sd, alpha / 2.0)
    return BandResult(a, b, am, bm, rho, g, e, alpha, flagged, n_eval)


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")


def mixture_quantile(mixture: MixtureField, rho: float, upper: bool = False,
                     max_iter: int = 200) -> np.ndarray:
    """Pointwise quantile of a Gaussian mixture by vectorized bisection.

    With ``upper=True`` returns the ``1 - rho`` quantile, solved through the
    survival function so small ``rho`` keeps full precision. The bracket is
    spanned by the component quantiles; if they coincide the common value is
    returned unchanged.
    """
    w = mixture.weights
    mus = np.stack([c.mu for c in mixture.components])
    sds = np.stack([c.sd for c in mixture.components])
    ql, qu = _gauss_band(mus, sds, rho)
    q = qu if upper else ql
    lo = q.min(axis=0)
    hi = q.max(axis=0)
    sign = -1.0 if upper else 1.0

    def excess(x):
        return w @ norm_cdf(sign * (x - mus) / sds) - rho

    for _ in range(max_iter):
        open_ = lo < hi
        if not open_.any():
            break
        mid = np.where(open_, 0.5 * (lo + hi), lo)
        f = sign * excess(mid)
        go_up = f < 0
        new_lo = np.where(open_ & go_up, mid, lo)
        new_hi = np.where(open_ & ~go_up, mid, hi)
        stalled = (new_lo == lo) & (new_hi == hi)
        lo, hi = new_lo, np.where(stalled, lo, new_hi)
    return lo if upper else hi


def simconf_mixture(
    mixture: MixtureField,
    alpha: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    threads: Optional[int] = None,
) -> BandResult:
    """Band for ``sum_k w_k N(mu_k, Q_k^{-1})``.

    Coverage is ``sum_k w_k P_k(band)``, each component integral using the
    same seed. Standard errors combine as ``sum_k w_k E_k``, an upper bound
    for correlated estimates.
    """
    _check_alpha(alpha)
    factors = [factorize(c.Q, minimum_degree_ordering(c.Q)) for c in mixture.components]

    def band(rho):
        return mixture_quantile(mixture, rho), mixture_quantile(mixture, rho, upper=True)

    def coverage(rho):
        a, b = band(rho)
        g = 0.0
        e = 0.0
        for wk, comp, fac in zip(mixture.weights, mixture.components, factors):
            r = gaussint(comp.mu, fac, (a, b), n_samples=n_samples, seed=seed, threads=threads)
            g += wk * r.P
            e += wk * r.E
        return g, e

    rho, g, e, flagged, n_eval = _bisect(coverage, alpha, tol)
    a, b = band(rho)
    am, bm = band(alpha / 2.0)
    return BandResult(a, b, am, bm, rho, g, e, alpha, flagged, n_eval)


def simconf_mc(ensemble: SampleEnsemble, alpha: float, tol: float = 0.0) -> BandResult:
    """Band from order statistics of the realizations.

    The band at step ``k`` runs from the ``k``-th smallest to the ``k``-th
    largest value at each node (0-based), covering the samples that stay
    inside it everywhere. The largest ``k`` not exceeding the pointwise step
    ``floor(N alpha / 2)`` with coverage ``>= 1 - alpha`` is found by binary
    search; ``rho = k / N``. A positive ``tol`` ends the search early at
    any step whose coverage is within ``tol`` of ``1 - alpha``.
    """
    _check_alpha(alpha)
    X = ensemble.values
    N = X.shape[1]
    S = np.sort(X, axis=1)
    k_marg = int(np.floor(N * alpha / 2.0))

    def cov(k):
        inside = (X >= S[:, k:k + 1]) & (X <= S[:, N - 1 - k:N - k])
        return float(inside.all(axis=0).mean())

    target = 1.0 - alpha
    lo, hi = 0, k_marg
    if cov(hi) >= target:
        lo = hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        g = cov(mid)
        if g >= target and g - target <= tol:
            lo = hi = mid
            break
        if g >= target:
            lo = mid
        else:
            hi = mid
    k = lo
    g = cov(k)
    # the outermost band (k = 0) is the fallback when nothing reaches the target
    return BandResult(
        a=S[:, k].copy(), b=S[:, N - 1 - k].copy(),
        a_marginal=S[:, k_marg].copy(), b_marginal=S[:, N - 1 - k_marg].copy(),
        rho=k / N, coverage=g, coverage_se=float(np.sqrt(g * (1 - g) / N)),
        alpha=alpha, marginal_is_simultaneous=(k == k_marg and g - target > 0),
    )
