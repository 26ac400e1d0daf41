"""Scalar special functions shared by the detector and its evaluators.

Everything here is a pure function of its arguments.  The noncentral
chi-square CDF (two degrees of freedom) is computed by the canonical
Poisson-mixture series, which is robust for the small noncentralities that
arise at low detection SNR; the Bessel function is kept in the log domain so
large arguments from long sensing runs do not overflow.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sp

__all__ = [
    "gaussian_q",
    "gaussian_q_inv",
    "log_bessel_i0",
    "noncentral_chisq2_cdf",
]

_SQRT2 = math.sqrt(2.0)


def gaussian_q(x: float) -> float:
    """Upper tail of the standard normal, Q(x) = P(Z > x)."""
    if not math.isfinite(x):
        raise ValueError(f"gaussian_q requires a finite argument, got {x!r}")
    return 0.5 * math.erfc(x / _SQRT2)


def gaussian_q_inv(p: float) -> float:
    """Inverse of :func:`gaussian_q` on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"gaussian_q_inv requires 0 < p < 1, got {p!r}")
    x = -float(sp.ndtri(p))
    # One Newton polish against our own Q; the derivative is -phi(x).
    phi = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if phi > 0.0:
        x -= (p - gaussian_q(x)) / phi
    return x


def log_bessel_i0(x):
    """ln I0(x) for x >= 0, overflow-free for large x.

    Accepts scalars or arrays; returns the same shape.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("log_bessel_i0 requires x >= 0")
    out = np.log(sp.i0e(arr)) + arr
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def noncentral_chisq2_cdf(x, lam: float):
    """CDF of a noncentral chi-square RV with 2 dof and noncentrality lam.

    Computed as sum_k Pois(k; lam/2) * P(chisq_{2+2k} <= x), truncated once
    the remaining Poisson mass is below 1e-16.  Equals 1 - Q1(sqrt(lam),
    sqrt(x)) in terms of the first-order Marcum Q function.  Returns 0 for
    x <= 0.  Accepts scalar or array x.
    """
    if lam < 0.0:
        raise ValueError("noncentrality must be nonnegative")
    arr = np.asarray(x, dtype=float)
    scalar = np.isscalar(x) or arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros_like(arr)
    pos = arr > 0.0
    if np.any(pos):
        half = arr[pos] / 2.0
        mu = lam / 2.0
        if mu == 0.0:
            out[pos] = -np.expm1(-half)
        else:
            # Enough terms that the Poisson tail beyond k_max is < 1e-16.
            k_max = int(math.ceil(mu + 12.0 * math.sqrt(mu + 1.0) + 25.0))
            ks = np.arange(k_max + 1)
            log_w = ks * math.log(mu) - mu - sp.gammaln(ks + 1)
            w = np.exp(log_w)
            out[pos] = np.einsum("k,kn->n", w, sp.gammainc(ks[:, None] + 1.0, half[None, :]))
    np.clip(out, 0.0, 1.0, out=out)
    if scalar:
        return float(out[0])
    return out
