import math

import numpy as np
import pytest

from ssct import (
    Arith,
    GridRecursion,
    GridSpec,
    SignalModel,
    SimSpec,
    SsctConfig,
    UnstableEvaluationError,
    asn,
    efficiency,
    estimate,
    false_alarm_exact,
    h1_increment_pdf,
    j_band,
    lower_bound,
    miss_detection_grid,
    noise_side_exact,
    signal_side_grid,
    upper_bound,
)

from oracles import depth2_grid_oracle, random_configs


class TestGridSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(200)
        with pytest.raises(ValueError):
            GridSpec(400)  # even
        with pytest.raises(ValueError):
            GridSpec(401, quadrature="gauss")

    def test_auto_caps_step(self, cfg_m5db):
        spec = GridSpec.auto(cfg_m5db)
        step = (cfg_m5db.b_bar - cfg_m5db.a_bar) / (spec.points - 1)
        assert step <= 0.25
        assert spec.points % 2 == 1


class TestExactNoiseSide:
    def test_m2_closed_form(self):
        # with M=2 the expected sample count has a one-line closed form
        cfg = SsctConfig(a_bar=-4.0, b_bar=5.0, gamma_bar=-1.0, delta_bar=2.5, M=2, snr_m=1.0)
        a1 = lower_bound(1, cfg)
        b1 = upper_bound(1, cfg)
        expected = 1.0 + (math.exp(-a1 / 2.0) - math.exp(-b1 / 2.0))
        summary = noise_side_exact(cfg)
        assert summary.asn_h0 == pytest.approx(expected, rel=1e-12)
        # and the truncation probability is the same band term
        assert summary.t_p_h0 == pytest.approx(expected - 1.0, rel=1e-12)

    def test_m2_alpha_decomposition(self):
        cfg = SsctConfig(a_bar=-4.0, b_bar=5.0, gamma_bar=-1.0, delta_bar=2.5, M=2, snr_m=1.0)
        from ssct import derive_bounds, j_upper

        b1 = upper_bound(1, cfg)
        g2 = derive_bounds(cfg).gamma_bar_M
        expected = math.exp(-b1 / 2.0) + 0.25 * j_upper(2, g2, 0.5, cfg)
        assert false_alarm_exact(cfg) == pytest.approx(expected, rel=1e-12)

    def test_certified_at_0db(self, cfg_0db):
        s = noise_side_exact(cfg_0db)
        assert 0.0 <= s.alpha <= 1.0
        assert 1.0 <= s.asn_h0 <= cfg_0db.M
        assert s.alpha == pytest.approx(0.011, abs=0.001)

    def test_forced_precision_matches_ladder(self, cfg_0db):
        ladder = noise_side_exact(cfg_0db)
        forced = noise_side_exact(cfg_0db, arith=Arith(bits=192))
        assert forced.alpha == pytest.approx(ladder.alpha, rel=1e-10)
        assert forced.asn_h0 == pytest.approx(ladder.asn_h0, rel=1e-10)

    def test_asn_equals_band_sum(self, cfg_0db):
        s = noise_side_exact(cfg_0db)
        bands = [0.5**N * j_band(N, 0.5, cfg_0db) for N in range(1, cfg_0db.M)]
        assert s.asn_h0 == pytest.approx(1.0 + math.fsum(bands), rel=1e-10)
        assert s.t_p_h0 == pytest.approx(bands[-1], rel=1e-10)


class TestGridRecursion:
    def test_initial_is_cdf(self, cfg_toy):
        model = SignalModel.constant_modulus(1.0)
        rec = GridRecursion(cfg_toy, model, GridSpec(201))
        g, g0 = rec.initial(cfg_toy.gamma_bar)
        assert g0 == pytest.approx(model.increment_cdf(cfg_toy.gamma_bar, cfg_toy.delta_bar))
        assert np.all(np.diff(g) <= 1e-12)  # nonincreasing in t

    def test_depth2_against_quadrature(self):
        cfg = SsctConfig(a_bar=-6.0, b_bar=5.0, gamma_bar=-1.0, delta_bar=2.5, M=2, snr_m=1.0)
        model = SignalModel.constant_modulus(1.0)
        got = miss_detection_grid(cfg, model, GridSpec(1601))
        assert got == pytest.approx(depth2_grid_oracle(cfg, model, cfg.gamma_bar), abs=2e-5)

    def test_depth2_mixture_against_quadrature(self):
        cfg = SsctConfig(a_bar=-6.0, b_bar=5.0, gamma_bar=-1.0, delta_bar=2.5, M=2, snr_m=1.0)
        model = SignalModel.qam64(1.0)
        got = miss_detection_grid(cfg, model, GridSpec(1601))
        assert got == pytest.approx(depth2_grid_oracle(cfg, model, cfg.gamma_bar), abs=2e-5)

    def test_grid_doubling_converged(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        coarse = miss_detection_grid(cfg_0db, model, GridSpec(801))
        fine = miss_detection_grid(cfg_0db, model, GridSpec(1601))
        assert abs(coarse - fine) < 1e-4

    def test_convergence_tol_passes(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        val = miss_detection_grid(cfg_0db, model, GridSpec(801), convergence_tol=1e-4)
        assert 0.0 <= val <= 1.0

    def test_signal_side_summands_in_unit_interval(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        beta, asn_h1, t_p_h1 = signal_side_grid(cfg_0db, model, GridSpec.auto(cfg_0db))
        assert 0.0 <= beta <= 1.0
        assert 1.0 <= asn_h1 <= cfg_0db.M
        assert 0.0 <= t_p_h1 <= 1.0

    def test_pdf_wrapper(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        assert h1_increment_pdf(0.5, model, cfg_0db) == model.increment_pdf(0.5, cfg_0db.delta_bar)


class TestAgainstMonteCarlo:
    @pytest.mark.parametrize("idx", range(5))
    def test_exact_and_grid_match_simulation(self, idx):
        cfg, model = random_configs(5, seed=404)[idx]
        trials = 200_000
        alpha = false_alarm_exact(cfg)
        h0 = estimate(SimSpec(cfg=cfg, model=None, hypothesis="H0", trials=trials, seed=90 + idx))
        assert abs(alpha - h0.error_prob.point) < 3.0 * h0.error_prob.std_err + 1e-6

        beta = miss_detection_grid(cfg, model, GridSpec.auto(cfg))
        h1 = estimate(SimSpec(cfg=cfg, model=model, hypothesis="H1", trials=trials, seed=190 + idx))
        assert abs(beta - h1.error_prob.point) < 3.0 * h1.error_prob.std_err + 5e-4

    def test_asn_h1_matches_simulation(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        _, asn_h1, t_p_h1 = signal_side_grid(cfg_0db, model, GridSpec.auto(cfg_0db))
        sim = estimate(SimSpec(cfg=cfg_0db, model=model, hypothesis="H1", trials=300_000, seed=17))
        assert abs(asn_h1 - sim.asn.point) < 3.0 * sim.asn.std_err + 0.02
        assert abs(t_p_h1 - sim.t_p.point) < 3.0 * sim.t_p.std_err + 5e-4

    def test_normalized_statistic_moments(self, cfg_m5db):
        # without stopping, the cumulative normalized energy at step M under
        # noise has mean 2M and variance 4M
        rng = np.random.default_rng(23)
        M = cfg_m5db.M
        sums = rng.exponential(2.0, size=(100_000, M)).sum(axis=1)
        assert sums.mean() == pytest.approx(2.0 * M, rel=0.01)
        assert sums.var() == pytest.approx(4.0 * M, rel=0.01)


class TestReport:
    def test_report_fields(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        rep = asn(cfg_0db, model, GridSpec.auto(cfg_0db), m_ed_min=40)
        assert rep.alpha_method == "exact"
        assert rep.beta_method == "grid"
        assert rep.asn_mixed == pytest.approx(0.5 * rep.asn_h0 + 0.5 * rep.asn_h1)
        assert rep.efficiency == pytest.approx(1.0 - rep.asn_mixed / 40.0)
        assert 0.0 <= rep.t_p_h0 <= 1.0 and 0.0 <= rep.t_p_h1 <= 1.0

    def test_priors_validated(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        with pytest.raises(ValueError):
            asn(cfg_0db, model, priors=(0.7, 0.7))

    def test_montecarlo_fallback(self, cfg_0db):
        model = SignalModel.constant_modulus(1.0)
        rep = asn(cfg_0db, model, GridSpec.auto(cfg_0db), exact_m_limit=10, mc_trials=20_000)
        assert rep.alpha_method == "montecarlo"
        assert rep.alpha == pytest.approx(0.011, abs=0.01)

    def test_efficiency(self):
        assert efficiency(95.0, 140) == pytest.approx(0.3214, abs=5e-4)
        assert efficiency(3154.0, 4450) == pytest.approx(0.2912, abs=5e-4)
        assert efficiency(140.0, 140) == 0.0
        with pytest.raises(ValueError):
            efficiency(10.0, 0)
