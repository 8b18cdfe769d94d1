"""Standard normal CDF, quantile and truncated draws with tail-safe forms."""

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp


def norm_cdf(z):
    return ndtr(z)


def norm_ppf(p):
    return ndtri(p)


def norm_isf(p):
    """Upper-tail quantile, ``Phi^{-1}(1 - p)`` without forming ``1 - p``."""
    return -ndtri(p)


def _lower_tail_draw(alpha, beta, u):
    # Requires alpha <= 0 so that Phi(alpha) carries full relative precision.
    la = log_ndtr(alpha)
    lb = log_ndtr(beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log of mass Phi(beta) - Phi(alpha)
        lw = lb + np.log(-np.expm1(la - lb))
        lw = np.where(np.isneginf(la), lb, lw)
        lp = np.logaddexp(np.log1p(-u) + la, np.log(u) + lb)
    return ndtri_exp(lp), np.exp(lw)


def truncated_standard_draw(alpha, beta, u):
    """Inverse-CDF draw from N(0, 1) truncated to ``(alpha, beta)``.

    Returns ``(z, mass)`` where ``mass = Phi(beta) - Phi(alpha)``. When
    ``alpha > 0`` the problem is mirrored into the lower tail first, so both
    the draw and the mass stay accurate out to ``|z| ~ 38``.
    """
    alpha, beta, u = np.broadcast_arrays(
        np.asarray(alpha, dtype=np.float64),
        np.asarray(beta, dtype=np.float64),
        np.asarray(u, dtype=np.float64),
    )
    flip = alpha > 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)
    # mirror u as well so the draw stays increasing in u
    z, mass = _lower_tail_draw(lo, hi, np.where(flip, 1.0 - u, u))
    z = np.where(flip, -z, z)
    # keep the draw strictly inside the interval
    z = np.minimum(np.maximum(z, np.nextafter(alpha, np.inf)), np.nextafter(beta, -np.inf))
    return z, np.clip(mass, 0.0, 1.0)


def truncated_mass(alpha, beta):
    """``Phi(beta) - Phi(alpha)`` evaluated in the lower tail."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    flip = alpha > 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)
    la = log_ndtr(lo)
    lb = log_ndtr(hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        lw = np.where(np.isneginf(la), lb, lb + np.log(-np.expm1(la - lb)))
    return np.clip(np.exp(lw), 0.0, 1.0)


def truncated_normal_draw(m, s, lo, hi, u01):
    """Draw from N(m, s^2) truncated to ``(lo, hi)`` given a uniform ``u01``."""
    m = np.asarray(m, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    z, _ = truncated_standard_draw((lo - m) / s, (hi - m) / s, u01)
    x = m + s * z
    x = np.minimum(np.maximum(x, np.nextafter(lo, np.inf)), np.nextafter(hi, -np.inf))
    return x[()] if np.ndim(x) == 0 else x
