"""Operating characteristics of the truncated sequential test.

Three evaluation routes live here:

* exact noise-side quantities (false-alarm probability, expected sample
  count under noise, truncation probability under noise) from the recursive
  integral tables, with automatic precision escalation and dual-precision
  certification;
* the backward grid recursion for signal-side quantities (miss-detection
  probability, expected sample count under signal, truncation probability
  under signal), using Simpson quadrature and linear interpolation on a
  fixed grid over [a_bar, b_bar];
* Monte Carlo fallback (module :mod:`ssct.montecarlo`) when the exact route
  is not certified at the requested truncation size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundaries import SsctConfig, derive_bounds
from .integrals import Arith, ExactTables, UnstableEvaluationError
from .model import SignalModel

__all__ = [
    "GridSpec",
    "PerformanceReport",
    "ExactNoiseSummary",
    "false_alarm_exact",
    "noise_side_exact",
    "h1_increment_pdf",
    "GridRecursion",
    "miss_detection_grid",
    "signal_side_grid",
    "asn",
    "efficiency",
]

# Precision ladder for the exact recursions: None = native float64, then
# gmpy2 mantissa widths.  Certification requires two adjacent rungs to agree.
_PRECISION_LADDER = (None, 128, 256, 512, 1024, 2048)
_CERT_ATOL = 1e-10
_CERT_RTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the backward recursion grid over [a_bar, b_bar]."""

    points: int = 801
    quadrature: str = "simpson"

    def __post_init__(self) -> None:
        if self.points < 201 or self.points % 2 == 0:
            raise ValueError("grid needs at least 201 points and an odd count")
        if self.quadrature not in ("simpson", "trapezoid"):
            raise ValueError("quadrature must be 'simpson' or 'trapezoid'")

    @classmethod
    def auto(cls, cfg: SsctConfig, max_step: float = 0.25) -> "GridSpec":
        """Points chosen so the node spacing is at most ``max_step``, which
        keeps quadrature wiggle negligible even for wide threshold spans."""
        span = cfg.b_bar - cfg.a_bar
        n = max(801, int(math.ceil(span / max_step)) + 1)
        if n % 2 == 0:
            n += 1
        return cls(points=n)


@dataclass(frozen=True)
class ExactNoiseSummary:
    """Noise-hypothesis quantities from the exact recursions."""

    alpha: float
    asn_h0: float
    t_p_h0: float
    precision_bits: int | None  # mantissa bits of the certifying run (None = float64)


@dataclass(frozen=True)
class PerformanceReport:
    alpha: float
    alpha_method: str
    beta: float
    beta_method: str
    asn_h0: float
    asn_h1: float
    asn_mixed: float
    t_p_h0: float
    t_p_h1: float
    priors: tuple[float, float]
    efficiency: float | None = None


# ---------------------------------------------------------------------------
# Exact noise-side evaluation
# ---------------------------------------------------------------------------


def _noise_side_at(cfg: SsctConfig, bits: int | None, want_asn: bool) -> tuple[float, float, float]:
    """(alpha, asn_h0, t_p_h0) at one precision; asn/t_p are nan unless requested."""
    tab = ExactTables(cfg, Arith(bits))
    ar = tab.arith
    bounds = derive_bounds(cfg)
    with ar.context():
        half = ar.num(0.5)
        # P(stop by upper crossing at step N) = 2^-(N-1) e^(-b_N/2) I^(N-1)
        alpha = ar.zero
        for N in range(1, cfg.M):
            b_N = ar.num(cfg.b_bar) + N * ar.num(cfg.delta_bar)
            alpha += half ** (N - 1) * ar.exp(-half * b_N) * tab.volume(N - 1)
        alpha += half**cfg.M * tab.j_upper(cfg.M, bounds.gamma_bar_M)
        alpha_f = ar.to_float(alpha)
        asn_f = math.nan
        tp_f = math.nan
        if want_asn:
            # E[N_s] = 1 + sum_N P(still running after N); the last band
            # probability is also the truncation probability.
            asn = ar.one
            band = ar.zero
            for N in range(1, cfg.M):
                band = half**N * tab.j_band(N)
                asn += band
            asn_f = ar.to_float(asn)
            tp_f = ar.to_float(band)  # 2^-(M-1) J_band(M-1) = P(N_s = M)
    for label, val, hi in (("alpha", alpha_f, 1.0), ("asn", asn_f, float(cfg.M)), ("t_p", tp_f, 1.0)):
        if not math.isnan(val) and not (-1e-12 <= val <= hi * (1.0 + 1e-9) + 1e-12):
            raise UnstableEvaluationError(
                f"exact {label} left its valid range at precision {bits or 'float64'}",
                certified_n=0,
            )
    return alpha_f, asn_f, tp_f


def _close(x: float, y: float) -> bool:
    if math.isnan(x) and math.isnan(y):
        return True
    return abs(x - y) <= _CERT_ATOL + _CERT_RTOL * max(abs(x), abs(y))


def noise_side_exact(
    cfg: SsctConfig,
    arith: Arith | None = None,
    want_asn: bool = True,
) -> ExactNoiseSummary:
    """Exact alpha / E[N_s | noise] / truncation probability, certified.

    With ``arith`` given, a single uncertified evaluation at that precision is
    returned (range checks still apply).  Otherwise the precision ladder is
    climbed until two adjacent rungs agree; failure to certify raises
    :class:`UnstableEvaluationError`.
    """
    if arith is not None:
        a, s, t = _noise_side_at(cfg, arith.bits, want_asn)
        return ExactNoiseSummary(a, s, t, arith.bits)

    # Skip rungs that clearly lack headroom for the cancellation at this M.
    ladder = [b for b in _PRECISION_LADDER if b is None and cfg.M <= 200 or (b or 0) >= min(128, cfg.M)]
    prev: tuple[float, float, float] | None = None
    prev_bits: int | None = None
    last_err: UnstableEvaluationError | None = None
    for bits in ladder:
        try:
            cur = _noise_side_at(cfg, bits, want_asn)
        except UnstableEvaluationError as err:
            last_err = err
            prev = None
            continue
        if prev is not None and all(_close(p, c) for p, c in zip(prev, cur)):
            return ExactNoiseSummary(cur[0], cur[1], cur[2], bits)
        prev, prev_bits = cur, bits
    raise UnstableEvaluationError(
        f"exact noise-side evaluation not certified up to {_PRECISION_LADDER[-1]} bits "
        f"at M={cfg.M}" + (f": {last_err}" if last_err else ""),
        certified_n=getattr(last_err, "certified_n", 0),
    )


def false_alarm_exact(cfg: SsctConfig, arith: Arith | None = None) -> float:
    """Probability of rejecting the noise-only hypothesis when it is true."""
    return noise_side_exact(cfg, arith=arith, want_asn=False).alpha


# ---------------------------------------------------------------------------
# Backward grid recursion (signal side)
# ---------------------------------------------------------------------------


def h1_increment_pdf(u, model: SignalModel, cfg: SsctConfig):
    """Density of one shifted normalized increment under the signal model."""
    return model.increment_pdf(u, cfg.delta_bar)


class GridRecursion:
    """Backward recursion for P(no upper crossing and terminal statistic
    below a threshold), on a fixed grid of accumulated-statistic values.

    G_0(t) = 1{t < tau}; G_k(t) = CDF(a_bar - t) + integral over
    x in (a_bar, b_bar) of G_{k-1}(x) pdf(x - t) dx.  The kernel matrix is
    built once per (config, model, grid) and reused for every threshold and
    every recursion depth; the integrand's support edge at x = t - delta_bar
    gets its own Simpson subgrid per row so the pdf jump is never straddled.
    Values at t = 0 (the quantity of interest, not always a grid node) are
    tracked through an extra probe row.
    """

    def __init__(self, cfg: SsctConfig, model: SignalModel, grid: GridSpec):
        self.cfg = cfg
        self.model = model
        self.grid = grid
        n = grid.points
        self.t = np.linspace(cfg.a_bar, cfg.b_bar, n)
        self.kernel = np.empty((n, n))
        for i, ti in enumerate(self.t):
            self.kernel[i] = self._row(ti)
        self.probe = self._row(0.0)
        self.cdf_lo = model.increment_cdf(cfg.a_bar - self.t, cfg.delta_bar)
        self.cdf_lo0 = model.increment_cdf(cfg.a_bar - 0.0, cfg.delta_bar)

    def _row(self, ti: float) -> np.ndarray:
        """Quadrature weights mapping grid samples of G to the integral at t=ti."""
        cfg, n = self.cfg, self.grid.points
        lo = max(cfg.a_bar, ti - cfg.delta_bar)
        hi = cfg.b_bar
        row = np.zeros(n)
        if hi - lo <= 0.0:
            return row
        m = n  # odd by construction; serves both quadrature rules
        x = np.linspace(lo, hi, m)
        w = self._quad_weights(m, (hi - lo) / (m - 1))
        u = x - ti
        # the subgrid may start exactly on the density's support edge; use the
        # right limit there, not the zero left value
        u[0] = max(u[0], -cfg.delta_bar + 1e-12)
        w = w * self.model.increment_pdf(u, cfg.delta_bar)
        # scatter through linear interpolation onto the t-grid
        step = (cfg.b_bar - cfg.a_bar) / (n - 1)
        pos = (x - cfg.a_bar) / step
        j = np.clip(pos.astype(int), 0, n - 2)
        frac = pos - j
        np.add.at(row, j, w * (1.0 - frac))
        np.add.at(row, j + 1, w * frac)
        return row

    def _quad_weights(self, m: int, h: float) -> np.ndarray:
        if self.grid.quadrature == "trapezoid":
            w = np.full(m, h)
            w[0] = w[-1] = h / 2.0
            return w
        w = np.empty(m)
        w[0::2] = 2.0
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w * (h / 3.0)

    def initial(self, tau: float) -> tuple[np.ndarray, float]:
        """G_1 on the grid and at t=0, from the closed single-step form."""
        cfg = self.cfg
        tau_c = min(max(tau, cfg.a_bar), cfg.b_bar)
        g = self.model.increment_cdf(tau_c - self.t, cfg.delta_bar)
        g0 = self.model.increment_cdf(tau_c - 0.0, cfg.delta_bar)
        return g, g0

    def step(self, g: np.ndarray) -> tuple[np.ndarray, float]:
        """One backward step: returns (G_k on the grid, G_k at t=0)."""
        return self.cdf_lo + self.kernel @ g, self.cdf_lo0 + float(self.probe @ g)

    def sweep(self, taus: tuple[float, ...], depth: int, collect_from: int = 0):
        """Run the recursion to ``depth`` for several thresholds at once.

        Returns (values of G_depth at t=0 per threshold, list per threshold of
        G_k(0) for k = collect_from .. depth).  Monotonicity of every G_k in t
        is asserted on each sweep (small quadrature wiggle tolerated).
        """
        g = np.column_stack([self.initial(tau)[0] for tau in taus])
        g0 = [self.initial(tau)[1] for tau in taus]
        history = [[] for _ in taus]
        if collect_from <= 1:
            for h, v in zip(history, g0):
                h.append(v)
        for k in range(2, depth + 1):
            # G_k(0) comes from the probe row applied to G_{k-1} on the grid
            g0 = self.cdf_lo0 + self.probe @ g
            if k >= collect_from:
                for h, v in zip(history, g0):
                    h.append(float(v))
            if k < depth:
                g = self.cdf_lo[:, None] + self.kernel @ g
                diffs = np.diff(g, axis=0)
                if np.any(diffs > 5e-6):
                    raise RuntimeError(
                        f"grid recursion lost monotonicity at depth {k}; refine the grid"
                    )
                np.clip(g, 0.0, 1.0, out=g)
        return [float(v) for v in g0], history


def miss_detection_grid(
    cfg: SsctConfig,
    model: SignalModel,
    grid: GridSpec,
    terminal_threshold: float | None = None,
    convergence_tol: float | None = None,
) -> float:
    """P(accept the noise-only hypothesis | signal present) by the backward
    recursion; ``terminal_threshold`` defaults to gamma_bar.

    With ``convergence_tol`` set, the value is recomputed at doubled
    resolution and a drift above the tolerance raises a refinement error.
    """
    tau = cfg.gamma_bar if terminal_threshold is None else terminal_threshold
    rec = GridRecursion(cfg, model, grid)
    if cfg.M == 1:
        return rec.initial(tau)[1]
    finals, _ = rec.sweep((tau,), cfg.M)
    beta = finals[0]
    if convergence_tol is not None:
        fine = miss_detection_grid(
            cfg, model, GridSpec(2 * grid.points - 1, grid.quadrature), tau
        )
        if abs(fine - beta) > convergence_tol:
            raise RuntimeError(
                f"grid at {grid.points} points not converged: "
                f"|{beta:.6g} - {fine:.6g}| > {convergence_tol:g}"
            )
    return beta


def signal_side_grid(
    cfg: SsctConfig, model: SignalModel, grid: GridSpec
) -> tuple[float, float, float]:
    """(beta, asn_h1, t_p_h1) in one pass of the backward recursion.

    E[N_s | signal] = 1 + sum over N < M of P(still running after N), where
    each band probability is G_N(0, b_bar) - G_N(0, a_bar); the last one is
    the truncation probability.
    """
    rec = GridRecursion(cfg, model, grid)
    finals, hist = rec.sweep(
        (cfg.gamma_bar, cfg.b_bar, cfg.a_bar), cfg.M, collect_from=1
    )
    beta = finals[0]
    hb, ha = hist[1], hist[2]  # G_k(0) for k = 1 .. M (b and a thresholds)
    bands = [b - a for b, a in zip(hb[: cfg.M - 1], ha[: cfg.M - 1])]
    asn_h1 = 1.0 + math.fsum(bands)
    t_p_h1 = bands[-1]
    return beta, asn_h1, t_p_h1


# ---------------------------------------------------------------------------
# Combined report
# ---------------------------------------------------------------------------


def asn(
    cfg: SsctConfig,
    model: SignalModel,
    grid: GridSpec | None = None,
    priors: tuple[float, float] = (0.5, 0.5),
    m_ed_min: int | None = None,
    mc_trials: int = 10**6,
    seed: int = 0,
    exact_m_limit: int = 600,
) -> PerformanceReport:
    """Full operating-characteristic report under the given priors.

    The noise side uses the exact recursions when the truncation size is
    within ``exact_m_limit`` and certification succeeds, otherwise Monte
    Carlo with ``mc_trials`` trials.  The signal side always uses the grid
    recursion.  ``m_ed_min`` (fixed-sample reference size) adds the
    efficiency figure, computed from the prior-mixed sample count.
    """
    if abs(priors[0] + priors[1] - 1.0) > 1e-12 or min(priors) < 0.0:
        raise ValueError("priors must be a probability pair summing to one")
    grid = grid or GridSpec()
    alpha_method = "exact"
    summary = None
    if cfg.M <= exact_m_limit:
        try:
            summary = noise_side_exact(cfg)
        except UnstableEvaluationError:
            summary = None
    if summary is not None:
        alpha, asn_h0, t_p_h0 = summary.alpha, summary.asn_h0, summary.t_p_h0
    else:
        from .montecarlo import SimSpec, estimate

        alpha_method = "montecarlo"
        est = estimate(SimSpec(cfg=cfg, model=model, hypothesis="H0", trials=mc_trials, seed=seed))
        alpha, asn_h0, t_p_h0 = est.error_prob.point, est.asn.point, est.t_p.point
    beta, asn_h1, t_p_h1 = signal_side_grid(cfg, model, grid)
    asn_mixed = priors[0] * asn_h0 + priors[1] * asn_h1
    eff = efficiency(asn_mixed, m_ed_min) if m_ed_min is not None else None
    return PerformanceReport(
        alpha=alpha,
        alpha_method=alpha_method,
        beta=beta,
        beta_method="grid",
        asn_h0=asn_h0,
        asn_h1=asn_h1,
        asn_mixed=asn_mixed,
        t_p_h0=t_p_h0,
        t_p_h1=t_p_h1,
        priors=priors,
        efficiency=eff,
    )


def efficiency(asn_value: float, m_ed_min: int) -> float:
    """Fractional sensing-time saving against a fixed-sample reference."""
    if m_ed_min <= 0:
        raise ValueError("reference sample size must be positive")
    return 1.0 - asn_value / m_ed_min
