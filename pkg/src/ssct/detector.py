"""Online decision engine for the truncated sequential energy test.

The detector consumes raw sample energies |r_i|^2 one at a time, accumulates
the shifted statistic Lambda_N = sum_i (|r_i|^2 - Delta), and decides:

* for N <= M-1: reject the noise-only hypothesis when Lambda_N >= b, accept
  when Lambda_N <= a, otherwise continue;
* at the truncation point N = M: reject iff Lambda_M >= gamma.

Ties sit with the closed comparisons above (>= b rejects, <= a accepts,
= gamma rejects), which keeps boundary tests deterministic.  The statistic is
kept in raw energy units on the hot path; the normalized cumulative energy
view (xi_N against the slant boundaries) is provided as an independent
implementation for cross-checking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .boundaries import SsctConfig

__all__ = ["Verdict", "Decision", "DetectorState", "detector_new", "detector_step", "run_to_decision", "run_to_decision_transformed"]


class Verdict(enum.Enum):
    REJECT_H0 = "reject_h0"  # primary user declared present
    ACCEPT_H0 = "accept_h0"  # channel declared free
    CONTINUE = "continue"


@dataclass(frozen=True)
class Decision:
    """Outcome of one detector step; terminal outcomes carry the sample count
    and the terminal statistic (raw energy units)."""

    verdict: Verdict
    n_s: int | None = None
    statistic: float | None = None

    @property
    def terminal(self) -> bool:
        return self.verdict is not Verdict.CONTINUE


@dataclass
class DetectorState:
    """Single-owner mutable state of one sensing run."""

    cfg: SsctConfig
    n: int = 0
    lambda_n: float = 0.0
    terminated: bool = False


def detector_new(cfg: SsctConfig) -> DetectorState:
    """Fresh detector; config validity is enforced by SsctConfig itself."""
    return DetectorState(cfg=cfg)


def detector_step(state: DetectorState, energy: float) -> Decision:
    """Feed one sample energy; returns the (possibly terminal) decision."""
    if state.terminated:
        raise RuntimeError("detector already terminated; create a new one")
    if not energy >= 0.0:
        raise ValueError(f"sample energy must be nonnegative, got {energy!r}")
    cfg = state.cfg
    state.n += 1
    state.lambda_n += energy - cfg.delta
    lam = state.lambda_n
    if state.n < cfg.M:
        if lam >= cfg.b:
            verdict = Verdict.REJECT_H0
        elif lam <= cfg.a:
            verdict = Verdict.ACCEPT_H0
        else:
            return Decision(Verdict.CONTINUE)
    else:
        verdict = Verdict.REJECT_H0 if lam >= cfg.gamma else Verdict.ACCEPT_H0
    state.terminated = True
    return Decision(verdict, n_s=state.n, statistic=lam)


def run_to_decision(cfg: SsctConfig, energy_stream) -> tuple[Decision, int]:
    """Fold detector_step over the stream until a terminal decision."""
    state = detector_new(cfg)
    for energy in energy_stream:
        decision = detector_step(state, energy)
        if decision.terminal:
            return decision, decision.n_s
    raise ValueError(f"energy stream exhausted after {state.n} samples without a decision")


def run_to_decision_transformed(cfg: SsctConfig, energy_stream) -> tuple[Decision, int]:
    """Equivalent test on the cumulative normalized energy against the slant
    boundaries; independent arithmetic path used to cross-check
    :func:`run_to_decision`."""
    scale = 2.0 / cfg.noise_power
    xi = 0.0
    n = 0
    for energy in energy_stream:
        if not energy >= 0.0:
            raise ValueError(f"sample energy must be nonnegative, got {energy!r}")
        n += 1
        xi += energy * scale
        slant = n * cfg.delta_bar
        stat = (xi - slant) / scale  # raw-unit statistic for reporting
        if n < cfg.M:
            if xi >= cfg.b_bar + slant:
                return Decision(Verdict.REJECT_H0, n, stat), n
            if xi <= cfg.a_bar + slant:
                return Decision(Verdict.ACCEPT_H0, n, stat), n
        else:
            v = Verdict.REJECT_H0 if xi >= cfg.gamma_bar + slant else Verdict.ACCEPT_H0
            return Decision(v, n, stat), n
    raise ValueError(f"energy stream exhausted after {n} samples without a decision")
