"""Contour maps of a field estimate and their quality measures.

A contour map with levels ``u_1 < ... < u_K`` splits the nodes into level
sets ``G_0..G_K`` by the value of the mean. Each mid-level
``e_k = (u_k + u_{k+1}) / 2`` may only be crossed inside the sets adjacent
to it, which confines a node in ``G_k`` to the box ``(e_{k-1}, e_{k+1})``
(edge sets are unbounded outward). ``P2`` is the joint probability of all
boxes; the contour map function is the nested version of the same
integral, and ``P0`` its weighted average.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .gaussint import DEFAULT_SAMPLES, IntegralLimits, gaussint
from .model import GaussianField, SampleEnsemble
from .normal import truncated_mass

STYLES = ("equidistant", "equalarea")


@dataclass(frozen=True, eq=False)
class ContourMapResult:
    levels: np.ndarray
    mid_levels: np.ndarray
    set_index: np.ndarray
    order: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    P0: Optional[float] = None
    P2: Optional[float] = None
    P2_se: Optional[float] = None
    meta: Optional[dict] = None


def select_levels(mu, n_levels: int, style: str = "equidistant") -> np.ndarray:
    """Contour levels for the estimate ``mu``.

    ``equidistant`` spaces ``K`` levels evenly strictly inside the range of
    ``mu``; ``equalarea`` uses the ``k / (K + 1)`` quantiles of ``mu`` with
    linear interpolation between order statistics.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if n_levels < 1:
        raise ValueError("n_levels must be at least 1")
    lo, hi = mu.min(), mu.max()
    if not hi > lo:
        raise ValueError("cannot place contour levels on a constant field")
    k = np.arange(1, n_levels + 1)
    if style == "equidistant":
        return lo + k * (hi - lo) / (n_levels + 1)
    if style == "equalarea":
        levels = np.quantile(mu, k / (n_levels + 1))
        if np.any(np.diff(levels) <= 0):
            raise ValueError("equal-area levels are not distinct; use fewer levels")
        return levels
    raise ValueError(f"style must be one of {STYLES}, got {style!r}")


def _check_levels(levels) -> np.ndarray:
    levels = np.asarray(levels, dtype=np.float64).reshape(-1)
    if levels.size < 1 or not np.all(np.isfinite(levels)):
        raise ValueError("need at least one finite contour level")
    if np.any(np.diff(levels) <= 0):
        raise ValueError("contour levels must be strictly increasing")
    return levels


def mid_levels(levels) -> np.ndarray:
    """``e_0 = -inf``, ``e_k = (u_k + u_{k+1}) / 2``, ``e_K = +inf``."""
    u = _check_levels(levels)
    return np.concatenate(([-np.inf], (u[:-1] + u[1:]) / 2.0, [np.inf]))


def set_index(values, levels) -> np.ndarray:
    """Level set ``k`` with ``u_k < value < u_{k+1}``.

    A value equal to a level ``u_k`` is assigned to ``G_{k-1}``, the set
    below it.
    """
    return np.searchsorted(_check_levels(levels), np.asarray(values), side="left")


def box_limits(values, levels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = mid_levels(levels)
    ext = np.concatenate(([-np.inf], e, [np.inf]))
    k = set_index(values, levels)
    return ext[k], ext[k + 2], k


def _box_prob(field: GaussianField, a, b) -> np.ndarray:
    return truncated_mass((a - field.mu) / field.sd, (b - field.mu) / field.sd)


def _descending(p: np.ndarray) -> np.ndarray:
    return np.lexsort((np.arange(p.size), -p))


def _nested_boxes(field, levels, n_samples, seed, F_limit=1.0, threads=None):
    a, b, k = box_limits(field.mu, levels)
    order = _descending(_box_prob(field, a, b))
    if np.all(np.isinf(a)) and np.all(np.isinf(b)):
        d = field.dim
        return order, np.ones(d), np.zeros(d), 1.0, 0.0, k
    res = gaussint(
        field.mu, field.Q, IntegralLimits(a, b), order=order,
        n_samples=n_samples, alpha_stop=F_limit, seed=seed, threads=threads,
    )
    Pv = res.Pv.copy()
    below = np.flatnonzero(Pv < 1.0 - F_limit)
    if below.size:
        Pv[below[0] + 1:] = np.nan
    done = not np.isnan(Pv[-1])
    return order, Pv, res.Ev, (res.P if done else None), (res.E if done else None), k


def measure_P2(field: GaussianField, levels, n_samples: int = DEFAULT_SAMPLES,
               seed: int = 0, threads=None) -> tuple[float, float]:
    """Joint probability that every mid-level crossing stays in its own sets.

    Returns ``(P2, standard error)``. With a single level both boxes are the
    whole real line and ``P2 == 1`` exactly.
    """
    _, _, _, P2, E, _ = _nested_boxes(field, levels, n_samples, seed, threads=threads)
    return P2, E


def contourmap_F(field: GaussianField, levels, F_limit: float = 1.0,
                 n_samples: int = DEFAULT_SAMPLES, seed: int = 0, threads=None) -> np.ndarray:
    """Contour map function in node order; NaN past the ``F_limit`` stop."""
    order, Pv, _, _, _, _ = _nested_boxes(field, levels, n_samples, seed, F_limit, threads)
    F = np.empty(field.dim)
    F[order] = Pv
    return F


def measure_P0(F, weights=None) -> float:
    """Weighted mean of the contour map function; not-computed counts as 0."""
    F = np.nan_to_num(np.asarray(F, dtype=np.float64), nan=0.0)
    w = np.ones_like(F) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != F.shape:
        raise ValueError("weights must match F in length")
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be non-negative with a positive sum")
    return float(np.dot(w, F) / w.sum())


def _compute_flags(compute: Iterable[str]) -> set:
    flags = set(compute)
    unknown = flags - {"F", "P0", "P2"}
    if unknown:
        raise ValueError(f"unknown compute flags {sorted(unknown)}")
    if "P0" in flags:
        flags.add("F")
    return flags


def contourmap(
    field: GaussianField,
    levels=None,
    n_levels: Optional[int] = None,
    style: str = "equidistant",
    compute: Iterable[str] = (),
    F_limit: float = 1.0,
    weights=None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads=None,
) -> ContourMapResult:
    """Contour map of the field mean with optional ``F``, ``P0`` and ``P2``."""
    if levels is None:
        if n_levels is None:
            raise ValueError("give either levels or n_levels")
        levels = select_levels(field.mu, n_levels, style)
    levels = _check_levels(levels)
    flags = _compute_flags(compute)
    e = mid_levels(levels)
    k = set_index(field.mu, levels)
    out = dict(levels=levels, mid_levels=e, set_index=k)
    if flags:
        F_lim = F_limit if "F" in flags else 1.0
        order, Pv, _, P2, E, _ = _nested_boxes(field, levels, n_samples, seed, F_lim, threads)
        out["order"] = order
        if "F" in flags:
            F = np.empty(field.dim)
            F[order] = Pv
            out["F"] = F
            if "P0" in flags:
                out["P0"] = measure_P0(F, weights)
        if "P2" in flags:
            if P2 is None:
                # F_limit stopped the nested run before the last node
                P2, E = measure_P2(field, levels, n_samples, seed, threads)
            out["P2"], out["P2_se"] = P2, E
    out["meta"] = dict(style=style, n_samples=n_samples, seed=seed, F_limit=F_limit)
    return ContourMapResult(**out)


def choose_n_levels(
    field: GaussianField,
    style: str = "equidistant",
    credibility_target: float = 0.9,
    K_max: int = 10,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads=None,
) -> tuple[int, dict]:
    """Largest ``K <= K_max`` whose point estimate of ``P2`` reaches the target.

    Returns ``K`` and a table ``{K: (P2, standard error)}`` over all ``K``
    tried. ``K = 1`` always qualifies since its ``P2`` is exactly one.
    """
    if K_max < 1:
        raise ValueError("K_max must be at least 1")
    table = {}
    best = 1
    for K in range(1, K_max + 1):
        P2, E = measure_P2(field, select_levels(field.mu, K, style), n_samples, seed, threads)
        table[K] = (P2, E)
        if P2 >= credibility_target:
            best = K
    return best, table


def contourmap_mc(
    ensemble: SampleEnsemble,
    levels=None,
    n_levels: Optional[int] = None,
    style: str = "equidistant",
    compute: Iterable[str] = ("P2",),
    F_limit: float = 1.0,
    weights=None,
) -> ContourMapResult:
    """Contour map quantities from Monte Carlo realizations.

    Level sets come from the ensemble mean; box probabilities, ``F`` and
    ``P2`` are empirical frequencies over the samples.
    """
    X = ensemble.values
    N = X.shape[1]
    mean = X.mean(axis=1)
    if levels is None:
        if n_levels is None:
            raise ValueError("give either levels or n_levels")
        levels = select_levels(mean, n_levels, style)
    levels = _check_levels(levels)
    flags = _compute_flags(compute)
    a, b, k = box_limits(mean, levels)
    inside = (X > a[:, None]) & (X < b[:, None])
    out = dict(levels=levels, mid_levels=mid_levels(levels), set_index=k)
    if flags:
        order = _descending(inside.mean(axis=1))
        joint = np.logical_and.accumulate(inside[order], axis=0).sum(axis=1) / N
        out["order"] = order
        if "F" in flags:
            Fp = joint.copy()
            below = np.flatnonzero(Fp < 1.0 - F_limit)
            if below.size:
                Fp[below[0] + 1:] = np.nan
            F = np.empty_like(Fp)
            F[order] = Fp
            out["F"] = F
            if "P0" in flags:
                out["P0"] = measure_P0(F, weights)
        if "P2" in flags:
            P2 = float(joint[-1])
            out["P2"], out["P2_se"] = P2, float(np.sqrt(P2 * (1 - P2) / N))
    out["meta"] = dict(style=style, n_samples=N, F_limit=F_limit)
    return ContourMapResult(**out)
