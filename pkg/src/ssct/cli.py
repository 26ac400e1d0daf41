"""Command-line front end: evaluate configs, reproduce the benchmark tables,
and sweep design parameters.

Subcommands
-----------
evaluate --config cfg.json [--out out.csv]
    Run the evaluations enabled in the config and print a report.
table {1|2|3|4} --out out.csv [--trials N] [--seed S]
    Reproduce one of the benchmark comparison tables as long-format CSV.
sweep --param NAME --values v1,v2,... --config cfg.json [--out out.csv]
    Re-evaluate the config with one parameter swept over a list.

CSV output is long-format with columns scenario,metric,value,stderr,method
(RFC 4180, byte-stable for a fixed seed).  Exit codes: 2 for usage/schema
errors, 3 for numerical-instability errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

from .baselines import SprtConfig, ed_min_samples
from .boundaries import SsctConfig
from .integrals import UnstableEvaluationError
from .model import SignalModel
from .montecarlo import SimSpec, estimate, sprt_estimate
from .performance import GridSpec, noise_side_exact, signal_side_grid

__all__ = ["main", "ExperimentConfig", "cmd_evaluate", "cmd_table", "cmd_sweep"]


class SchemaError(ValueError):
    """Config file fails validation."""


@dataclass
class ExperimentConfig:
    """Parsed experiment description (dB values converted once, here)."""

    snr_m_db: float
    gamma_bar: float
    b_bar: float
    M: int
    snr_o_db: float | None = None
    a_bar: float | None = None
    delta_bar: float | None = None
    modulation: str = "qpsk"
    noise_power: float = 1.0
    targets: tuple[float, float] | None = None
    exact: bool = True
    grid: bool = True
    montecarlo: bool = False
    trials: int = 10**6
    seed: int = 0
    grid_points: int | None = None
    priors: tuple[float, float] = (0.5, 0.5)
    precision: str = "auto"

    def __post_init__(self) -> None:
        if self.modulation not in ("qpsk", "qam64"):
            raise SchemaError(f"unknown modulation {self.modulation!r}")
        if self.precision not in ("auto", "native", "extended"):
            raise SchemaError(f"unknown precision {self.precision!r}")

    @property
    def snr_m(self) -> float:
        return 10.0 ** (self.snr_m_db / 10.0)

    @property
    def snr_o(self) -> float:
        db = self.snr_m_db if self.snr_o_db is None else self.snr_o_db
        return 10.0 ** (db / 10.0)

    def detector_config(self) -> SsctConfig:
        a_bar = -self.b_bar if self.a_bar is None else self.a_bar
        delta_bar = 2.0 + self.snr_m if self.delta_bar is None else self.delta_bar
        try:
            return SsctConfig(
                a_bar=a_bar,
                b_bar=self.b_bar,
                gamma_bar=self.gamma_bar,
                delta_bar=delta_bar,
                M=self.M,
                snr_m=self.snr_m,
                noise_power=self.noise_power,
            )
        except ValueError as err:
            raise SchemaError(str(err)) from err

    def signal_model(self) -> SignalModel:
        maker = SignalModel.qam64 if self.modulation == "qam64" else SignalModel.constant_modulus
        return maker(self.snr_o)

    def grid_spec(self, cfg: SsctConfig) -> GridSpec:
        if self.grid_points is not None:
            return GridSpec(self.grid_points)
        return GridSpec.auto(cfg)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise SchemaError("config root must be an object")
        known = {
            "snr_m_db", "snr_o_db", "modulation", "a_bar", "b_bar", "gamma_bar",
            "delta_bar", "M", "noise_power", "targets", "evaluation",
        }
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        for key in ("snr_m_db", "gamma_bar", "b_bar", "M"):
            if key not in raw:
                raise SchemaError(f"missing required config key {key!r}")
        ev = raw.get("evaluation", {})
        if not isinstance(ev, dict):
            raise SchemaError("'evaluation' must be an object")
        targets = raw.get("targets")
        if targets is not None:
            if not isinstance(targets, dict) or set(targets) - {"alpha", "beta"}:
                raise SchemaError("'targets' must be {'alpha': ..., 'beta': ...}")
            targets = (float(targets["alpha"]), float(targets["beta"]))
        priors = ev.get("priors", (0.5, 0.5))
        try:
            return cls(
                snr_m_db=float(raw["snr_m_db"]),
                snr_o_db=None if raw.get("snr_o_db") is None else float(raw["snr_o_db"]),
                modulation=raw.get("modulation", "qpsk"),
                a_bar=None if raw.get("a_bar") is None else float(raw["a_bar"]),
                b_bar=float(raw["b_bar"]),
                gamma_bar=float(raw["gamma_bar"]),
                delta_bar=None if raw.get("delta_bar") is None else float(raw["delta_bar"]),
                M=int(raw["M"]),
                noise_power=float(raw.get("noise_power", 1.0)),
                targets=targets,
                exact=bool(ev.get("exact", True)),
                grid=bool(ev.get("grid", True)),
                montecarlo=bool(ev.get("montecarlo", False)),
                trials=int(ev.get("trials", 10**6)),
                seed=int(ev.get("seed", 0)),
                grid_points=None if ev.get("grid_points") is None else int(ev.get("grid_points")),
                priors=(float(priors[0]), float(priors[1])),
                precision=ev.get("precision", "auto"),
            )
        except (TypeError, ValueError) as err:
            raise SchemaError(f"bad config value: {err}") from err


@dataclass(frozen=True)
class Row:
    scenario: str
    metric: str
    value: float
    stderr: float | None
    method: str


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.10g}"


def write_csv(rows: list[Row], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "metric", "value", "stderr", "method"])
        for r in rows:
            w.writerow([r.scenario, r.metric, _fmt(r.value), _fmt(r.stderr), r.method])


def write_markdown(rows: list[Row], path: str) -> None:
    with open(path, "w") as fh:
        fh.write("| scenario | metric | value | stderr | method |\n")
        fh.write("|---|---|---|---|---|\n")
        for r in rows:
            fh.write(f"| {r.scenario} | {r.metric} | {_fmt(r.value)} | {_fmt(r.stderr)} | {r.method} |\n")


def evaluate_rows(exp: ExperimentConfig, scenario: str, exact_m_limit: int = 250) -> list[Row]:
    """Run the enabled evaluations for one experiment; returns long-format rows."""
    cfg = exp.detector_config()
    model = exp.signal_model()
    rows: list[Row] = []
    asn_h0 = t_p_h0 = None
    asn_h1 = t_p_h1 = None

    if exp.exact and cfg.M <= exact_m_limit:
        from .integrals import Arith

        arith = None
        if exp.precision == "native":
            arith = Arith()
        elif exp.precision == "extended":
            arith = Arith(bits=max(128, 2 * cfg.M))
        s = noise_side_exact(cfg, arith=arith)
        rows.append(Row(scenario, "alpha", s.alpha, None, "exact"))
        rows.append(Row(scenario, "asn_h0", s.asn_h0, None, "exact"))
        rows.append(Row(scenario, "t_p_h0", s.t_p_h0, None, "exact"))
        asn_h0, t_p_h0 = s.asn_h0, s.t_p_h0
    elif exp.exact or exp.montecarlo:
        est = estimate(SimSpec(cfg=cfg, model=None, hypothesis="H0", trials=exp.trials, seed=exp.seed))
        rows.append(Row(scenario, "alpha", est.error_prob.point, est.error_prob.std_err, "montecarlo"))
        rows.append(Row(scenario, "asn_h0", est.asn.point, est.asn.std_err, "montecarlo"))
        rows.append(Row(scenario, "t_p_h0", est.t_p.point, est.t_p.std_err, "montecarlo"))
        asn_h0, t_p_h0 = est.asn.point, est.t_p.point

    if exp.grid:
        beta, asn_h1, t_p_h1 = signal_side_grid(cfg, model, exp.grid_spec(cfg))
        rows.append(Row(scenario, "beta", beta, None, "grid"))
        rows.append(Row(scenario, "asn_h1", asn_h1, None, "grid"))
        rows.append(Row(scenario, "t_p_h1", t_p_h1, None, "grid"))

    if exp.montecarlo:
        est = estimate(SimSpec(cfg=cfg, model=model, hypothesis="H1", trials=exp.trials, seed=exp.seed + 1))
        rows.append(Row(scenario, "beta", est.error_prob.point, est.error_prob.std_err, "montecarlo"))
        rows.append(Row(scenario, "asn_h1", est.asn.point, est.asn.std_err, "montecarlo"))
        rows.append(Row(scenario, "t_p_h1", est.t_p.point, est.t_p.std_err, "montecarlo"))
        if asn_h1 is None:
            asn_h1, t_p_h1 = est.asn.point, est.t_p.point

    if asn_h0 is not None and asn_h1 is not None:
        p0, p1 = exp.priors
        mixed = p0 * asn_h0 + p1 * asn_h1
        rows.append(Row(scenario, "asn_mixed", mixed, None, "combined"))
        rows.append(Row(scenario, "t_p_mixed", p0 * t_p_h0 + p1 * t_p_h1, None, "combined"))
        if exp.targets is not None:
            m_ed = ed_min_samples(exp.snr_m, *exp.targets)
            rows.append(Row(scenario, "m_ed_min", float(m_ed), None, "analytic"))
            rows.append(Row(scenario, "efficiency", 1.0 - mixed / m_ed, None, "combined"))
    return rows


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as err:
        raise SchemaError(f"cannot read config: {err}") from err
    except json.JSONDecodeError as err:
        raise SchemaError(f"config is not valid JSON: {err}") from err
    return ExperimentConfig.from_dict(raw)


def _apply_cli_overrides(exp: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        exp.seed = args.seed
    if getattr(args, "trials", None) is not None:
        exp.trials = args.trials
    if getattr(args, "precision", None) is not None:
        exp.precision = args.precision
    return exp


def cmd_evaluate(args) -> int:
    exp = _apply_cli_overrides(_load_config(args.config), args)
    rows = evaluate_rows(exp, scenario="config")
    for r in rows:
        err = f" +- {r.stderr:.3g}" if r.stderr else ""
        print(f"{r.metric:>12}: {r.value:.6g}{err}  ({r.method})")
    if args.out:
        write_csv(rows, args.out)
    if args.markdown:
        write_markdown(rows, args.markdown)
    return 0


# Benchmark design points: (snr_m_db, gamma_bar, b_bar, M, targets).
# delta_bar follows the 2 + snr_m design rule; a_bar = -b_bar.
_TABLE1 = [
    (0.0, -8.5, 27.0, 40, (0.01, 0.01)),
    (-5.0, -5.69, 35.32, 140, (0.05, 0.05)),
    (-10.0, -4.0, 69.30, 730, (0.1, 0.1)),
    (-15.0, -1.897, 158.47, 4450, (0.15, 0.15)),
]
# (M, a_bar, b_bar, gamma_bar) at snr_m = -5 dB, targets (0.055, 0.046).
_TABLE4 = [
    (140, -35.32, 35.32, -5.69),
    (160, -28.95, 23.16, -5.50),
    (180, -27.33, 21.54, -6.00),
    (200, -26.40, 20.85, -6.32),
    (500, -25.48, 19.69, -6.32),
    (1000, -25.42, 19.63, -6.32),
]


def _table_rows(which: int, trials: int, seed: int) -> list[Row]:
    rows: list[Row] = []
    if which == 1:
        for snr_db, gbar, bbar, M, targets in _TABLE1:
            exp = ExperimentConfig(
                snr_m_db=snr_db, gamma_bar=gbar, b_bar=bbar, M=M, targets=targets,
                trials=trials, seed=seed, montecarlo=M > 250,
            )
            rows += evaluate_rows(exp, scenario=f"{snr_db:g}dB")
    elif which == 2:
        for snr_db, gbar, bbar, M, _targets in _TABLE1:
            for modulation in ("qpsk", "qam64"):
                exp = ExperimentConfig(
                    snr_m_db=snr_db, gamma_bar=gbar, b_bar=bbar, M=M,
                    modulation=modulation, exact=False, trials=trials, seed=seed,
                )
                rows += evaluate_rows(exp, scenario=f"{snr_db:g}dB/{modulation}")
    elif which == 3:
        snr_db, gbar, bbar, M, targets = _TABLE1[3]
        h0 = estimate(SimSpec(
            cfg=ExperimentConfig(snr_m_db=snr_db, gamma_bar=gbar, b_bar=bbar, M=M).detector_config(),
            model=None, hypothesis="H0", trials=trials, seed=seed,
        ))
        m_ed = ed_min_samples(10.0 ** (snr_db / 10.0), *targets)
        for snr_o_db in (-12.0, -13.0, -14.0, -15.0):
            scenario = f"snr_o={snr_o_db:g}dB"
            rows.append(Row(scenario, "alpha", h0.error_prob.point, h0.error_prob.std_err, "montecarlo"))
            exp = ExperimentConfig(
                snr_m_db=snr_db, snr_o_db=snr_o_db, gamma_bar=gbar, b_bar=bbar, M=M,
                exact=False, trials=trials, seed=seed,
            )
            rows += evaluate_rows(exp, scenario=scenario)
            beta_h1 = next(r.value for r in rows if r.scenario == scenario and r.metric == "asn_h1")
            mixed = 0.5 * h0.asn.point + 0.5 * beta_h1
            rows.append(Row(scenario, "asn_mixed", mixed, None, "combined"))
            rows.append(Row(scenario, "efficiency", 1.0 - mixed / m_ed, None, "combined"))
    elif which == 4:
        snr_m_db = -5.0
        targets = (0.055, 0.046)
        m_ed = 140
        for M, abar, bbar, gbar in _TABLE4:
            exp = ExperimentConfig(
                snr_m_db=snr_m_db, gamma_bar=gbar, b_bar=bbar, a_bar=abar, M=M,
                delta_bar=2.0 + 10.0 ** (snr_m_db / 10.0),
                trials=trials, seed=seed, montecarlo=M > 250,
            )
            sub = evaluate_rows(exp, scenario=f"M={M}")
            rows += sub
            mixed = next((r.value for r in sub if r.metric == "asn_mixed"), None)
            if mixed is not None:
                rows.append(Row(f"M={M}", "efficiency", 1.0 - mixed / m_ed, None, "combined"))
        lam = 2.0 * 10.0 ** (snr_m_db / 10.0)
        sp = SprtConfig.from_targets(*targets, lam)
        r0 = sprt_estimate(sp.a_l, sp.b_l, lam, "H0", max(trials // 10, 10**4), seed)
        r1 = sprt_estimate(sp.a_l, sp.b_l, lam, "H1", max(trials // 10, 10**4), seed + 1)
        mixed = 0.5 * (r0.asn.point + r1.asn.point)
        err = 0.5 * math.hypot(r0.asn.std_err, r1.asn.std_err)
        rows.append(Row("sprt", "asn_mixed", mixed, err, "montecarlo"))
        rows.append(Row("sprt", "t_p_mixed", 0.0, None, "montecarlo"))
        rows.append(Row("sprt", "efficiency", 1.0 - mixed / m_ed, err / m_ed, "montecarlo"))
    else:
        raise SchemaError(f"no such table: {which} (choose 1-4)")
    return rows


def cmd_table(args) -> int:
    rows = _table_rows(args.which, args.trials or 10**6, args.seed or 0)
    if args.out:
        write_csv(rows, args.out)
    for r in rows:
        err = f" +- {r.stderr:.3g}" if r.stderr else ""
        print(f"{r.scenario:>16} {r.metric:>12}: {r.value:.6g}{err}  ({r.method})")
    if args.markdown:
        write_markdown(rows, args.markdown)
    return 0


_SWEEPABLE = ("snr_o_db", "b_bar", "gamma_bar", "M")


def cmd_sweep(args) -> int:
    base = _apply_cli_overrides(_load_config(args.config), args)
    if args.param not in _SWEEPABLE:
        raise SchemaError(f"sweep parameter must be one of {_SWEEPABLE}")
    values = [v for v in args.values.split(",") if v.strip()]
    if not values:
        raise SchemaError("empty sweep range")
    rows: list[Row] = []
    for text in values:
        value = int(text) if args.param == "M" else float(text)
        exp = ExperimentConfig(**{**base.__dict__, args.param: value})
        rows += evaluate_rows(exp, scenario=f"{args.param}={text.strip()}")
    if args.out:
        write_csv(rows, args.out)
    for r in rows:
        err = f" +- {r.stderr:.3g}" if r.stderr else ""
        print(f"{r.scenario:>20} {r.metric:>12}: {r.value:.6g}{err}  ({r.method})")
    if args.markdown:
        write_markdown(rows, args.markdown)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssct", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write long-format CSV here")
        sp.add_argument("--markdown", help="write a markdown mirror here")
        sp.add_argument("--seed", type=int, help="Monte Carlo seed override")
        sp.add_argument("--trials", type=int, help="Monte Carlo trials override")
        sp.add_argument("--precision", choices=("auto", "native", "extended"))

    pe = sub.add_parser("evaluate", help="evaluate one experiment config")
    pe.add_argument("--config", required=True)
    common(pe)
    pe.set_defaults(func=cmd_evaluate)

    pt = sub.add_parser("table", help="reproduce a benchmark table")
    pt.add_argument("which", type=int)
    common(pt)
    pt.set_defaults(func=cmd_table)

    ps = sub.add_parser("sweep", help="sweep one parameter of a config")
    ps.add_argument("--config", required=True)
    ps.add_argument("--param", required=True)
    ps.add_argument("--values", required=True, help="comma-separated values")
    common(ps)
    ps.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except UnstableEvaluationError as err:
        print(f"numerical instability: {err} (largest certified N: {err.certified_n})", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
