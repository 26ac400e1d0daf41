import math

import numpy as np
import pytest

from ssct import SignalModel

from oracles import pdf_normalization


class TestConstruction:
    def test_constant_modulus(self):
        m = SignalModel.constant_modulus(0.5)
        assert m.lambdas.tolist() == [1.0]
        assert m.weights.tolist() == [1.0]
        assert m.mean_lambda == pytest.approx(1.0)

    def test_qam64(self):
        m = SignalModel.qam64(1.0)
        assert m.lambdas.size == 9
        assert m.weights.sum() == pytest.approx(1.0, abs=1e-14)
        # average symbol energy is normalized, so the mean noncentrality
        # equals the constant-modulus value 2*snr
        assert m.mean_lambda == pytest.approx(2.0, rel=1e-12)

    def test_qam64_multiplicities(self):
        m = SignalModel.qam64(1.0)
        counts = (m.weights * 64).round().astype(int)
        assert counts.sum() == 64
        assert counts.tolist() == [4, 8, 4, 8, 8, 12, 8, 8, 4]

    @pytest.mark.parametrize("snr", [0.0, -1.0])
    def test_bad_snr(self, snr):
        with pytest.raises(ValueError):
            SignalModel.constant_modulus(snr)
        with pytest.raises(ValueError):
            SignalModel.qam64(snr)

    def test_validation(self):
        with pytest.raises(ValueError):
            SignalModel(np.array([1.0, 2.0]), np.array([0.5]))
        with pytest.raises(ValueError):
            SignalModel(np.array([1.0]), np.array([0.9]))  # does not sum to 1
        with pytest.raises(ValueError):
            SignalModel(np.array([-1.0]), np.array([1.0]))


class TestIncrementDistribution:
    @pytest.mark.parametrize("maker", [SignalModel.constant_modulus, SignalModel.qam64])
    def test_pdf_normalizes(self, maker):
        model = maker(10.0 ** (-0.5))
        assert pdf_normalization(model, 2.3) == pytest.approx(1.0, abs=1e-10)

    def test_support(self):
        model = SignalModel.constant_modulus(1.0)
        assert model.increment_pdf(-2.5, 2.5) == 0.0
        assert model.increment_pdf(-3.0, 2.5) == 0.0
        assert model.increment_pdf(-2.4, 2.5) > 0.0

    def test_zero_lambda_is_shifted_exponential(self):
        model = SignalModel(np.array([0.0]), np.array([1.0]))
        for u in (-1.0, 0.0, 3.0):
            assert model.increment_pdf(u, 2.5) == pytest.approx(
                0.5 * math.exp(-0.5 * (u + 2.5)), rel=1e-12
            )

    def test_cdf_matches_pdf_integral(self):
        from scipy import integrate

        model = SignalModel.qam64(0.8)
        delta = 2.4
        for u in (-1.0, 0.5, 4.0):
            ref, _ = integrate.quad(
                lambda x: model.increment_pdf(x, delta), -delta, u, limit=300
            )
            assert model.increment_cdf(u, delta) == pytest.approx(ref, abs=1e-9)

    def test_cdf_limits(self):
        model = SignalModel.constant_modulus(1.0)
        assert model.increment_cdf(-2.5, 2.5) == 0.0
        assert model.increment_cdf(400.0, 2.5) == pytest.approx(1.0, abs=1e-12)

    def test_array_interface(self):
        model = SignalModel.constant_modulus(1.0)
        u = np.linspace(-3.0, 5.0, 17)
        pdf = model.increment_pdf(u, 2.5)
        cdf = model.increment_cdf(u, 2.5)
        assert pdf.shape == u.shape and cdf.shape == u.shape
        assert np.all(np.diff(cdf) >= -1e-14)
