import math

import numpy as np
import pytest
from scipy import signal

from models.garcia import (
    ArmaFit,
    ar_parameters,
    arma_mle,
    arma_reduction,
    filtered_kernel,
    garcia_estimate,
    garcia_from_fit,
    ma_acf,
    model_acf,
    recover_lambda,
)
from models.stable import RngStream, StableParams
from utils import ConfigError, EstimationFailure
from utils.pathsim import SimConfig, simulate


class TestMaAcf:
    def test_ma1(self):
        assert ma_acf([1.0, 0.5], 1) == pytest.approx(0.4)
        assert ma_acf([1.0, 0.5], 0) == pytest.approx(1.0)
        assert ma_acf([1.0, 0.5], 2) == 0.0

    def test_fit_attribute(self):
        assert ma_acf(ArmaFit(np.array([0.1]), np.array([0.5])), -1) == pytest.approx(0.4)


class TestFilteredKernel:
    def test_ou_support(self, ou):
        spec = ou.spec([-1.0])
        a_D = [1.0, -math.exp(-1)]
        assert filtered_kernel(spec, a_D, 0.5) == pytest.approx(math.exp(-0.5))
        np.testing.assert_allclose(filtered_kernel(spec, a_D, [1.5, 3.0, 10.0]), 0, atol=1e-14)

    def test_ex47_support(self, ex47):
        spec = ex47.spec([-3.0])
        a_D = np.poly(np.exp([-2.0, -3.0]))
        np.testing.assert_allclose(filtered_kernel(spec, a_D, [2.5, 4.0]), 0, atol=1e-12)
        assert abs(filtered_kernel(spec, a_D, 0.7)) > 0

    def test_model_acf_ou(self, ou):
        # an OU filtered kernel lives on one sampling interval, so lag one is uncorrelated
        assert model_acf(ou.spec([-1.0]), [1.0, -math.exp(-1)], 1) == pytest.approx(0.0, abs=1e-12)

    def test_model_acf_lags(self, ex48):
        spec = ex48.spec(ex48.theta0)
        a_D = arma_reduction(spec).a_D
        rho = model_acf(spec, a_D, [0, 1, 2])
        assert rho[0] == pytest.approx(1.0) and abs(rho[1]) < 1 and rho[2] == pytest.approx(0.0, abs=1e-10)
        with pytest.raises(ConfigError):
            model_acf(spec, a_D, -1)


class TestRecoverLambda:
    def test_ou(self):
        np.testing.assert_allclose(recover_lambda([1.0, -math.exp(-1)]), [-1.0], rtol=1e-12)

    def test_delta(self):
        np.testing.assert_allclose(recover_lambda([1.0, -math.exp(-1)], delta=0.5), [-2.0], rtol=1e-12)

    def test_negative_root(self):
        with pytest.raises(EstimationFailure) as e:
            recover_lambda([1.0, 0.5])
        assert e.value.stage == "log_root"

    def test_root_inside(self):
        with pytest.raises(EstimationFailure):
            recover_lambda([1.0, -2.0])

    def test_ex47_parameters(self, ex47):
        lam = recover_lambda(np.poly(np.exp([-2.0, -3.0])))
        np.testing.assert_allclose(ar_parameters(lam, ex47), [-3.0], rtol=1e-10)

    def test_ex47_fixed_root_missed(self, ex47):
        with pytest.raises(EstimationFailure):
            ar_parameters(np.array([-0.5, -4.0]), ex47)

    def test_ex48_parameters(self, ex48):
        lam = np.roots([1.0, *ex48.theta0[:2]])
        np.testing.assert_allclose(ar_parameters(lam, ex48), ex48.theta0[:2], rtol=1e-12)


class TestReduction:
    def test_ou(self, ou):
        fit = arma_reduction(ou.spec([-1.0]))
        np.testing.assert_allclose(fit.ar, [math.exp(-1)])
        assert fit.ma.size == 0

    @pytest.mark.parametrize("name", ["ou", "ex47", "ex48"])
    def test_recovers_truth(self, name, request):
        family = request.getfixturevalue(name)
        fit = arma_reduction(family.spec(family.theta0))
        theta, _ = garcia_from_fit(fit, family)
        np.testing.assert_allclose(theta, family.theta0, rtol=1e-4, atol=1e-6)

    def test_invertible_ma(self, ex48):
        fit = arma_reduction(ex48.spec(ex48.theta0))
        assert np.all(np.abs(np.roots(fit.c_D[::-1])) > 1)


class TestArmaMle:
    def test_ar1(self):
        e = np.random.default_rng(0).standard_normal(3000)
        y = signal.lfilter([1.0], [1.0, -0.5], e)
        fit = arma_mle(y, 1)
        assert fit.ar[0] == pytest.approx(0.5, abs=0.05)
        assert fit.sigma2 == pytest.approx(1.0, abs=0.1)

    def test_white_noise(self):
        fit = arma_mle(np.random.default_rng(0).standard_normal(2000), 1)
        assert fit.ar[0] == pytest.approx(0.0, abs=0.05)

    def test_deterministic(self):
        y = signal.lfilter([1.0, 0.3], [1.0, -1.2, 0.35], np.random.default_rng(4).standard_normal(1500))
        a, b = arma_mle(y, 2), arma_mle(y, 2)
        np.testing.assert_array_equal(a.ar, b.ar)
        np.testing.assert_array_equal(a.ma, b.ma)
        assert a.sigma2 == b.sigma2 and a.llf == b.llf

    def test_too_short(self):
        with pytest.raises(ConfigError):
            arma_mle(np.ones(15), 2)


class TestEstimate:
    def test_ou(self, ou):
        y = simulate(ou.spec([-1.0]), StableParams(1.5), SimConfig(2000), RngStream(21))
        res = garcia_estimate(y, ou)
        assert not res.failed
        assert res.theta_hat[0] == pytest.approx(-1.0, abs=0.3)
        assert res.to_dict()["lambda_hat"][0][0] == pytest.approx(res.theta_hat[0])

    def test_negative_ar_fails_at_log_root(self, ou):
        y = signal.lfilter([1.0], [1.0, 0.7], np.random.default_rng(23).standard_normal(1000))
        res = garcia_estimate(y, ou)
        assert res.failed and res.failure_stage == "log_root"
        assert np.isnan(res.theta_hat).all() and res.arma_fit.ar[0] < 0
