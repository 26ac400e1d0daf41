"""Reference schemes: fixed-sample energy detection and the non-truncated
sequential probability-ratio test.

Energy detection uses the Gaussian limiting distributions of the normalized
statistic 2T(r)/sigma_w^2 ~ Normal(2m, 4m) under noise and
Normal(2m(1+SNR), 4m(1+2SNR)) with a signal, so reproduced figures inherit
the same central-limit approximation as the published comparisons.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .special import gaussian_q, gaussian_q_inv, log_bessel_i0

__all__ = [
    "EnergyDetectorConfig",
    "SprtConfig",
    "ed_min_samples",
    "ed_threshold",
    "ed_error_probs",
    "sprt_increment",
    "sprt_run",
]


@dataclass(frozen=True)
class EnergyDetectorConfig:
    """Fixed-sample detector: compare the normalized energy sum to a threshold."""

    m: int
    threshold_normalized: float  # on the 2*T(r)/sigma_w^2 scale
    snr_m: float

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("sample size must be at least 1")
        if self.snr_m <= 0.0:
            raise ValueError("snr_m must be positive (linear scale)")

    @classmethod
    def design(cls, m: int, alpha_target: float, snr_m: float) -> "EnergyDetectorConfig":
        return cls(m, ed_threshold(m, alpha_target), snr_m)


@dataclass(frozen=True)
class SprtConfig:
    """Log-likelihood thresholds and design noncentrality of the sequential
    probability-ratio reference test."""

    a_l: float
    b_l: float
    lam: float

    def __post_init__(self) -> None:
        if not (self.a_l < 0.0 < self.b_l):
            raise ValueError("thresholds must satisfy a_l < 0 < b_l")
        if self.lam < 0.0:
            raise ValueError("noncentrality must be nonnegative")

    @classmethod
    def from_targets(cls, alpha_target: float, beta_target: float, lam: float) -> "SprtConfig":
        """Wald's threshold choice from target error rates."""
        if not (0.0 < alpha_target < 1.0 and 0.0 < beta_target < 1.0):
            raise ValueError("targets must lie in (0, 1)")
        a_l = math.log(beta_target / (1.0 - alpha_target))
        b_l = math.log((1.0 - beta_target) / alpha_target)
        return cls(a_l, b_l, lam)


def ed_min_samples(snr_m: float, alpha_target: float, beta_target: float) -> int:
    """Minimum fixed-sample size meeting both error targets at the design SNR."""
    if snr_m <= 0.0:
        raise ValueError("snr_m must be positive (linear scale)")
    if not (0.0 < alpha_target < 1.0 and 0.0 < beta_target < 1.0):
        raise ValueError("targets must lie in (0, 1)")
    qa = gaussian_q_inv(alpha_target)
    qb = gaussian_q_inv(1.0 - beta_target)
    m = math.ceil((qa - qb * math.sqrt(2.0 * snr_m + 1.0)) ** 2 / snr_m**2)
    return max(m, 1)


def ed_threshold(m: int, alpha_target: float) -> float:
    """Normalized threshold meeting the false-alarm target under the noise limit."""
    return 2.0 * m + 2.0 * math.sqrt(m) * gaussian_q_inv(alpha_target)


def ed_error_probs(cfg: EnergyDetectorConfig, snr_o: float) -> tuple[float, float]:
    """(false-alarm, miss) probabilities at operating SNR ``snr_o``.

    The false alarm depends only on the threshold, not on snr_o.
    """
    if snr_o <= 0.0:
        raise ValueError("snr_o must be positive (linear scale)")
    if cfg.m < 20:
        warnings.warn("sample size below 20: normal approximation is crude", stacklevel=2)
    m, thr = cfg.m, cfg.threshold_normalized
    alpha = gaussian_q((thr - 2.0 * m) / math.sqrt(4.0 * m))
    beta = 1.0 - gaussian_q(
        (thr - 2.0 * m * (1.0 + snr_o)) / math.sqrt(4.0 * m * (1.0 + 2.0 * snr_o))
    )
    return alpha, beta


def sprt_increment(v: float, lam: float) -> float:
    """Log-likelihood ratio of one normalized energy v = 2|r|^2/sigma_w^2."""
    if v < 0.0:
        raise ValueError("normalized energy must be nonnegative")
    if lam < 0.0:
        raise ValueError("noncentrality must be nonnegative")
    if lam == 0.0:
        return 0.0
    return -lam / 2.0 + log_bessel_i0(math.sqrt(lam * v))


def sprt_run(cfg: SprtConfig, energy_stream, max_samples: int = 10**6):
    """First-crossing run of the non-truncated reference test.

    ``energy_stream`` yields normalized energies v_i = 2|r_i|^2/sigma_w^2.
    Returns ("reject_h0" | "accept_h0", samples_used).  Exceeding
    ``max_samples`` raises instead of silently truncating.
    """
    llr = 0.0
    n = 0
    for v in energy_stream:
        n += 1
        if n > max_samples:
            raise RuntimeError(f"no decision after {max_samples} samples")
        llr += sprt_increment(v, cfg.lam)
        if llr >= cfg.b_l:
            return "reject_h0", n
        if llr <= cfg.a_l:
            return "accept_h0", n
    raise ValueError(f"energy stream exhausted after {n} samples without a decision")
