"""Detector configuration and the transformed slant-boundary geometry.

The sequential test accumulates shifted sample energies against two fixed
horizontal thresholds a < 0 < b with a terminal threshold gamma at the
truncation index M.  After normalizing by half the noise power and moving the
per-sample shift into the boundaries, the cumulative normalized energy
xi_N = sum_i 2|r_i|^2 / sigma_w^2 is tested against the arithmetic sequences

    a_i = max(0, a_bar + i * delta_bar)        (lower, clipped at zero)
    b_i = b_bar + i * delta_bar                (upper)

All index parameters (P, Q, s) are discrete and must be branch-stable, so
they are computed with exact rational arithmetic on the configured values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "SsctConfig",
    "BoundarySequences",
    "derive_bounds",
    "lower_bound",
    "upper_bound",
    "index_s",
    "psi_vector",
    "truncate_psi",
]


@dataclass(frozen=True)
class SsctConfig:
    """Design parameters of the truncated sequential test, in normalized units.

    ``a_bar``, ``b_bar``, ``gamma_bar`` and ``delta_bar`` are the raw
    thresholds a, b, gamma and the shift Delta scaled by 2 / sigma_w^2;
    ``snr_m`` is the minimum detection SNR (linear); ``noise_power`` is
    sigma_w^2 in energy units.
    """

    a_bar: float
    b_bar: float
    gamma_bar: float
    delta_bar: float
    M: int
    snr_m: float
    noise_power: float = 1.0

    def __post_init__(self) -> None:
        if not (self.a_bar < 0.0 < self.b_bar):
            raise ValueError("thresholds must satisfy a_bar < 0 < b_bar")
        if not (self.a_bar < self.gamma_bar < self.b_bar):
            raise ValueError("terminal threshold must satisfy a_bar < gamma_bar < b_bar")
        if self.snr_m <= 0.0:
            raise ValueError("snr_m must be positive (linear scale)")
        if not (2.0 < self.delta_bar < 2.0 * (1.0 + self.snr_m)):
            raise ValueError(
                "delta_bar must lie in (2, 2*(1+snr_m)) so the statistic drifts "
                "down under noise and up under signal"
            )
        if self.M < 2:
            raise ValueError("truncation size M must be at least 2")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be positive")

    @classmethod
    def from_raw(
        cls,
        a: float,
        b: float,
        gamma: float,
        delta: float,
        M: int,
        snr_m: float,
        noise_power: float = 1.0,
    ) -> "SsctConfig":
        """Build a config from raw energy-unit thresholds."""
        scale = 2.0 / noise_power
        return cls(a * scale, b * scale, gamma * scale, delta * scale, M, snr_m, noise_power)

    # Raw-unit views, used by the online detector.
    @property
    def a(self) -> float:
        return self.a_bar * self.noise_power / 2.0

    @property
    def b(self) -> float:
        return self.b_bar * self.noise_power / 2.0

    @property
    def gamma(self) -> float:
        return self.gamma_bar * self.noise_power / 2.0

    @property
    def delta(self) -> float:
        return self.delta_bar * self.noise_power / 2.0


@dataclass(frozen=True)
class BoundarySequences:
    """Derived integer indices and the terminal boundary value.

    ``P`` is the last index whose lower bound is clipped to zero, ``Q`` the
    last index with a_Q <= b_1, and ``gamma_bar_M`` the terminal threshold on
    the cumulative-energy scale.
    """

    P: int
    Q: int
    gamma_bar_M: float


def derive_bounds(cfg: SsctConfig) -> BoundarySequences:
    a = Fraction(cfg.a_bar)
    b = Fraction(cfg.b_bar)
    d = Fraction(cfg.delta_bar)
    P = math.floor(-a / d)
    # a_Q <= b_1 < a_{Q+1} with a_i = a_bar + i*delta_bar and b_1 = b_bar + delta_bar.
    Q = math.floor((b + d - a) / d)
    return BoundarySequences(P=P, Q=Q, gamma_bar_M=cfg.gamma_bar + cfg.M * cfg.delta_bar)


def lower_bound(i: int, cfg: SsctConfig) -> float:
    """a_i: zero through index P, then the slant line a_bar + i*delta_bar."""
    if i < 0:
        raise ValueError("index must be nonnegative")
    P = derive_bounds(cfg).P
    if i <= P:
        return 0.0
    return cfg.a_bar + i * cfg.delta_bar


def upper_bound(i: int, cfg: SsctConfig) -> float:
    """b_i = b_bar + i*delta_bar, strictly increasing."""
    if i < 1:
        raise ValueError("index must be at least 1")
    return cfg.b_bar + i * cfg.delta_bar


def index_s(c: float, cfg: SsctConfig) -> int:
    """The integer s with b_s < c <= b_{s+1}, taking b_0 = 0 (so s=0 for c <= b_1)."""
    if c <= 0.0:
        raise ValueError("index_s requires c > 0")
    q = (Fraction(c) - Fraction(cfg.b_bar)) / Fraction(cfg.delta_bar)
    s = math.ceil(q - 1)
    return max(s, 0)


def psi_vector(n: int, c: float, N: int, cfg: SsctConfig) -> list[float]:
    """The ordered lower-limit vector attached to index n and cut level c.

    Three cases, selected by where n falls relative to N - Q - 1 and s:
    Q leading copies of b_{n+1} followed by a_{Q+n+1} .. a_{N-1} and c; or
    N - n - 1 copies of b_{n+1} followed by c; or N - n copies of b_{n+1}.
    """
    if N < 2:
        raise ValueError("psi_vector requires N >= 2")
    if not 0 <= n <= N - 2:
        raise ValueError(f"psi_vector requires 0 <= n <= N-2, got n={n}, N={N}")
    lo = lower_bound(N - 1, cfg)
    if not (lo <= c <= upper_bound(N, cfg) + 1e-12):
        raise ValueError(f"cut level c={c} outside [a_(N-1), b_N]")
    bounds = derive_bounds(cfg)
    Q = bounds.Q
    s = index_s(c, cfg) if c > 0.0 else 0
    b_next = upper_bound(n + 1, cfg)
    if n >= s:
        return [b_next] * (N - n)
    if n >= N - Q - 1:
        return [b_next] * (N - n - 1) + [c]
    return (
        [b_next] * Q
        + [lower_bound(i, cfg) for i in range(Q + n + 1, N)]
        + [c]
    )


def truncate_psi(psi: list[float], i: int) -> list[float]:
    """Drop the last i entries (the projection used by the nested recursions)."""
    if not 0 <= i <= len(psi):
        raise ValueError("truncation length out of range")
    return psi[: len(psi) - i]
