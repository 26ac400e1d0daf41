"""Seeded Monte Carlo estimation of detector operating characteristics.

Sample energies follow r_i = h s_i + w_i with |h| = 1 and circular complex
Gaussian noise of power sigma_w^2: under the noise-only hypothesis the
normalized energy v = 2|r|^2/sigma_w^2 is chi-square with 2 degrees of
freedom; with a signal present it is noncentral chi-square with the
noncentrality drawn from the :class:`~ssct.model.SignalModel` mixture.

Trials are processed in fixed-size blocks, each with its own Philox
counter-based substream spawned from the spec seed, so estimates are
bit-identical for a given (spec, seed) regardless of the number of worker
threads (capped by the SSCT_THREADS environment variable).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boundaries import SsctConfig
from .model import SignalModel
from .special import log_bessel_i0

__all__ = ["SimSpec", "EstimateCI", "SimResult", "gen_energy", "estimate", "sprt_estimate"]

_BLOCK = 1 << 15  # trials per substream; fixed so seeding is thread-count independent
_MIN_TRIALS = 10**4


@dataclass(frozen=True)
class SimSpec:
    """One simulation experiment; the seed fully determines the streams."""

    cfg: SsctConfig
    model: SignalModel | None
    hypothesis: str
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.hypothesis not in ("H0", "H1"):
            raise ValueError("hypothesis must be 'H0' or 'H1'")
        if self.hypothesis == "H1" and self.model is None:
            raise ValueError("signal hypothesis needs a SignalModel")
        if self.trials < _MIN_TRIALS:
            raise ValueError(f"at least {_MIN_TRIALS} trials required for a reported estimate")


@dataclass(frozen=True)
class EstimateCI:
    point: float
    std_err: float
    trials: int


@dataclass(frozen=True)
class SimResult:
    """error_prob is the false-alarm rate under H0, the miss rate under H1."""

    error_prob: EstimateCI
    asn: EstimateCI
    t_p: EstimateCI


def _threads() -> int:
    raw = os.environ.get("SSCT_THREADS", "").strip()
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _draw_v(rng: np.random.Generator, count: int, spec: SimSpec) -> np.ndarray:
    """Normalized energies v = 2|r|^2/sigma_w^2 for one step of `count` trials."""
    if spec.hypothesis == "H0":
        return rng.exponential(2.0, count)
    model = spec.model
    if model.lambdas.size == 1:
        lam = np.full(count, model.lambdas[0])
    else:
        lam = rng.choice(model.lambdas, size=count, p=model.weights)
    x = rng.normal(np.sqrt(lam), 1.0)
    y = rng.normal(0.0, 1.0, count)
    return x * x + y * y


def _sim_block(spec: SimSpec, ss: np.random.SeedSequence, count: int):
    """Run `count` trials; returns (reject_count, ns_sum, ns_sq_sum, truncated_count)."""
    cfg = spec.cfg
    rng = np.random.Generator(np.random.Philox(ss))
    xi = np.zeros(count)
    ns = np.full(count, cfg.M)
    reject = np.zeros(count, bool)
    active = np.arange(count)
    for n in range(1, cfg.M + 1):
        xi[active] += _draw_v(rng, active.size, spec)
        slant = n * cfg.delta_bar
        cur = xi[active]
        if n < cfg.M:
            up = cur >= cfg.b_bar + slant
            down = cur <= cfg.a_bar + slant
            stopped = up | down
            idx = active[stopped]
            ns[idx] = n
            reject[active[up]] = True
            active = active[~stopped]
            if active.size == 0:
                break
        else:
            reject[active[cur >= cfg.gamma_bar + slant]] = True
    errors = int(reject.sum()) if spec.hypothesis == "H0" else int(count - reject.sum())
    return errors, float(ns.sum()), float((ns.astype(float) ** 2).sum()), int((ns == cfg.M).sum())


def _proportion_ci(successes: float, trials: int) -> EstimateCI:
    p = successes / trials
    return EstimateCI(p, math.sqrt(max(p * (1.0 - p), 0.0) / trials), trials)


def estimate(spec: SimSpec) -> SimResult:
    """Empirical decision-error rate, mean sample count, and truncation rate."""
    sizes = [_BLOCK] * (spec.trials // _BLOCK)
    if spec.trials % _BLOCK:
        sizes.append(spec.trials % _BLOCK)
    streams = np.random.SeedSequence(spec.seed).spawn(len(sizes))
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _sim_block(spec, *a), zip(streams, sizes)))
    else:
        parts = [_sim_block(spec, ss, m) for ss, m in zip(streams, sizes)]
    errors = sum(p[0] for p in parts)
    ns_sum = math.fsum(p[1] for p in parts)
    ns_sq = math.fsum(p[2] for p in parts)
    truncated = sum(p[3] for p in parts)
    T = spec.trials
    mean = ns_sum / T
    var = max(ns_sq / T - mean * mean, 0.0)
    return SimResult(
        error_prob=_proportion_ci(errors, T),
        asn=EstimateCI(mean, math.sqrt(var / T), T),
        t_p=_proportion_ci(truncated, T),
    )


def gen_energy(spec: SimSpec, i: int) -> float:
    """The i-th raw sample energy |r_i|^2 of the spec's deterministic stream."""
    if i < 0:
        raise ValueError("sample index must be nonnegative")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=spec.seed, spawn_key=(i,))))
    v = _draw_v(rng, 1, spec)[0]
    return float(v * spec.cfg.noise_power / 2.0)


def sprt_estimate(
    a_l: float,
    b_l: float,
    lam: float,
    hypothesis: str,
    trials: int,
    seed: int,
    lam_true: float | None = None,
    max_samples: int = 10**6,
) -> SimResult:
    """Monte Carlo operating characteristics of the non-truncated sequential
    probability-ratio reference test.

    The log-likelihood increment uses design noncentrality ``lam``; samples
    are drawn under ``hypothesis`` with true noncentrality ``lam_true``
    (defaults to ``lam``).  error_prob is the wrong-decision rate under the
    sampled hypothesis; t_p reports the (always zero unless capped) fraction
    of runs hitting ``max_samples``, which raises instead of truncating.
    """
    if not (a_l < 0.0 < b_l):
        raise ValueError("log-thresholds must satisfy a_l < 0 < b_l")
    if hypothesis not in ("H0", "H1"):
        raise ValueError("hypothesis must be 'H0' or 'H1'")
    if trials < _MIN_TRIALS:
        raise ValueError(f"at least {_MIN_TRIALS} trials required")
    lam_true = lam if lam_true is None else lam_true
    sizes = [_BLOCK] * (trials // _BLOCK)
    if trials % _BLOCK:
        sizes.append(trials % _BLOCK)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    errors = 0
    ns_sum = 0.0
    ns_sq = 0.0
    sqrt_lam = math.sqrt(lam)
    for ss, count in zip(streams, sizes):
        rng = np.random.Generator(np.random.Philox(ss))
        llr = np.zeros(count)
        ns = np.zeros(count, int)
        reject = np.zeros(count, bool)
        active = np.arange(count)
        for n in range(1, max_samples + 1):
            if hypothesis == "H0":
                v = rng.exponential(2.0, active.size)
            else:
                x = rng.normal(math.sqrt(lam_true), 1.0, active.size)
                y = rng.normal(0.0, 1.0, active.size)
                v = x * x + y * y
            llr[active] += -lam / 2.0 + log_bessel_i0(sqrt_lam * np.sqrt(v))
            cur = llr[active]
            up = cur >= b_l
            down = cur <= a_l
            stopped = up | down
            idx = active[stopped]
            ns[idx] = n
            reject[active[up]] = True
            active = active[~stopped]
            if active.size == 0:
                break
        else:
            raise RuntimeError(f"sequential ratio test exceeded {max_samples} samples")
        errors += int(reject.sum()) if hypothesis == "H0" else int(count - reject.sum())
        ns_sum += float(ns.sum())
        ns_sq += float((ns.astype(float) ** 2).sum())
    mean = ns_sum / trials
    var = max(ns_sq / trials - mean * mean, 0.0)
    return SimResult(
        error_prob=_proportion_ci(errors, trials),
        asn=EstimateCI(mean, math.sqrt(var / trials), trials),
        t_p=EstimateCI(0.0, 0.0, trials),
    )
