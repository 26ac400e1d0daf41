"""Primary-signal models: per-sample noncentrality distributions.

Under the signal hypothesis each normalized sample energy v_i = 2|r_i|^2 /
sigma_w^2 is noncentral chi-square with 2 degrees of freedom and
noncentrality lambda_i = 2 |h|^2 |s_i|^2 / sigma_w^2.  A modulation with
unit average symbol energy induces a discrete distribution over lambda:
constant-modulus schemes (PSK) give a single value 2*snr, square QAM gives a
small mixture over the ring energies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special import log_bessel_i0, noncentral_chisq2_cdf

__all__ = ["SignalModel"]

# Squared magnitudes (unnormalized) and multiplicities of the 64-QAM
# constellation on the odd-integer grid {+-1, +-3, +-5, +-7}^2; the mean
# squared magnitude is 42, which normalizes average symbol energy to one.
_QAM64_ENERGY = np.array([2.0, 10.0, 18.0, 26.0, 34.0, 50.0, 58.0, 74.0, 98.0])
_QAM64_COUNT = np.array([4.0, 8.0, 4.0, 8.0, 8.0, 12.0, 8.0, 8.0, 4.0])


@dataclass(frozen=True)
class SignalModel:
    """Distribution of the per-sample noncentrality under the signal hypothesis.

    ``lambdas[j]`` occurs with probability ``weights[j]``; samples are iid
    across the sensing window.
    """

    lambdas: np.ndarray
    weights: np.ndarray
    name: str = "custom"

    def __post_init__(self) -> None:
        lam = np.asarray(self.lambdas, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if lam.shape != w.shape or lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas and weights must be matching 1-d arrays")
        if np.any(lam < 0.0) or np.any(w < 0.0):
            raise ValueError("noncentralities and weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", w)

    @classmethod
    def constant_modulus(cls, snr: float) -> "SignalModel":
        """Single-lambda model for PSK-type signals: lambda = 2*snr."""
        if snr <= 0.0:
            raise ValueError("snr must be positive (linear scale)")
        return cls(np.array([2.0 * snr]), np.array([1.0]), name="constant_modulus")

    @classmethod
    def qam64(cls, snr: float) -> "SignalModel":
        """Nine-point lambda mixture of square 64-QAM at average SNR ``snr``."""
        if snr <= 0.0:
            raise ValueError("snr must be positive (linear scale)")
        lam = 2.0 * snr * _QAM64_ENERGY / 42.0
        return cls(lam, _QAM64_COUNT / 64.0, name="qam64")

    @property
    def mean_lambda(self) -> float:
        return float(np.dot(self.weights, self.lambdas))

    # -- distribution of the shifted increment u = v - delta_bar ---------------
    def increment_pdf(self, u, delta_bar: float):
        """Density of one shifted normalized increment under the signal model.

        v = u + delta_bar is a weighted mixture of noncentral chi-square(2)
        densities; support is u > -delta_bar.  Accepts scalar or array u.
        """
        arr = np.atleast_1d(np.asarray(u, dtype=float))
        v = arr + delta_bar
        out = np.zeros_like(arr)
        pos = v > 0.0
        if np.any(pos):
            vp = v[pos]
            acc = np.zeros_like(vp)
            for lam, w in zip(self.lambdas, self.weights):
                if lam == 0.0:
                    acc += w * 0.5 * np.exp(-0.5 * vp)
                else:
                    log_term = -0.5 * (vp + lam) + log_bessel_i0(np.sqrt(lam * vp))
                    acc += w * 0.5 * np.exp(log_term)
            out[pos] = acc
        if np.isscalar(u) or np.asarray(u).ndim == 0:
            return float(out[0])
        return out

    def increment_cdf(self, u, delta_bar: float):
        """CDF of the shifted increment; the mixture of noncentral CDFs."""
        arr = np.atleast_1d(np.asarray(u, dtype=float))
        v = arr + delta_bar
        out = np.zeros_like(arr)
        for lam, w in zip(self.lambdas, self.weights):
            out += w * noncentral_chisq2_cdf(v, lam)
        if np.isscalar(u) or np.asarray(u).ndim == 0:
            return float(out[0])
        return out
