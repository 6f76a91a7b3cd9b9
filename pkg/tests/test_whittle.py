import numpy as np
import pytest

from models.kalman import ArtifactCache
from models.stable import RngStream, StableParams
from models.whittle import (
    MinimizeOptions,
    WhittleObjective,
    minimize,
    start_points,
    whittle_adjusted,
    whittle_alpha,
    whittle_classical,
    whittle_estimate,
)
from utils import ConfigError
from utils.pathsim import SimConfig, simulate
from utils.spectral import periodogram, periodogram_direct


@pytest.fixture
def ou_series(ou):
    return simulate(ou.spec([-1.0]), StableParams(1.5), SimConfig(2000), RngStream(11))


class TestObjectives:
    def test_four_point_sum(self, ou):
        y = np.array([0.3, -1.2, 2.0, 0.5])
        I = periodogram(y)
        direct = periodogram_direct(y)
        pi2 = np.abs(1 - np.exp(-1) * np.exp(1j * I.freqs)) ** 2
        expected = np.pi / 4 * np.sum(pi2 * direct)
        assert whittle_adjusted(I, ArtifactCache(ou), [-1.0]) == pytest.approx(expected, rel=1e-10)

    def test_zero_series(self, ou):
        assert whittle_adjusted(periodogram(np.zeros(32)), ArtifactCache(ou), [-1.0]) == 0

    def test_scaling(self, ex48):
        y = np.random.default_rng(0).standard_normal(128)
        provider = ArtifactCache(ex48)
        a = whittle_adjusted(periodogram(y), provider, ex48.theta0)
        b = whittle_adjusted(periodogram(3 * y), provider, ex48.theta0)
        assert b == pytest.approx(9 * a, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.8, 1.5, 2.0])
    def test_alpha_ratio(self, ou, alpha):
        I = periodogram(np.random.default_rng(1).standard_normal(200))
        provider = ArtifactCache(ou)
        ratio = whittle_alpha(I, provider, [-1.0], alpha) / whittle_adjusted(I, provider, [-1.0])
        assert ratio == pytest.approx(200 ** (1 - 2 / alpha), rel=1e-12)

    def test_alpha_range(self, ou):
        with pytest.raises(ConfigError):
            whittle_alpha(periodogram([1.0, 2.0]), ArtifactCache(ou), [-1.0], 2.5)

    def test_invalid_theta(self, ou):
        I = periodogram([1.0, 2.0, 3.0])
        assert whittle_adjusted(I, ArtifactCache(ou), [0.5]) == np.inf
        assert whittle_classical(I, ArtifactCache(ou), [0.5]) == np.inf

    def test_classical_prefers_truth(self, ou):
        y = simulate(ou.spec([-1.0]), StableParams(2.0, 2**-0.5), SimConfig(4000), RngStream(12))
        objective = WhittleObjective(periodogram(y), ou, kind="classical")
        assert objective([-1.0]) < min(objective([-0.3]), objective([-3.0]))

    def test_unknown_kind(self, ou):
        with pytest.raises(ConfigError):
            WhittleObjective(periodogram([1.0]), ou, kind="debiased")


class TestMinimize:
    def test_quadratic(self, ex48):
        target = np.asarray(ex48.theta0)
        res = minimize(lambda x: float(np.sum((x - target) ** 2)), ex48)
        assert not res.failed
        np.testing.assert_allclose(res.theta_hat, target, atol=1e-5)

    def test_constant(self, ex48):
        res = minimize(lambda x: 1.0, ex48)
        assert res.failure == "constant objective"
        np.testing.assert_array_equal(res.theta_hat, ex48.center)

    def test_all_fail(self, ou):
        res = minimize(lambda x: np.inf, ou)
        assert res.failed and np.isnan(res.theta_hat).all()

    def test_start_points(self, ex48):
        starts = start_points(ex48, 11, lambda x: float(np.sum(x**2)))
        assert len(starts) == 11
        np.testing.assert_array_equal(starts[0], ex48.center)
        assert np.all((starts >= ex48.bounds[:, 0]) & (starts <= ex48.bounds[:, 1]))

    def test_start_points_small(self, ou):
        assert len(start_points(ou, 11)) == 3

    def test_threads_agree(self, ex48):
        f = lambda x: float(np.sum((x - 1) ** 2))  # noqa: E731
        a = minimize(f, ex48, MinimizeOptions(threads=1))
        b = minimize(f, ex48, MinimizeOptions(threads=4))
        np.testing.assert_array_equal(a.theta_hat, b.theta_hat)


class TestEstimate:
    def test_ou(self, ou, ou_series):
        res = whittle_estimate(ou_series, ou, alpha=1.5)
        assert not res.failed and res.extra["objective"] == "alpha"
        assert res.theta_hat[0] == pytest.approx(-1.0, abs=0.2)

    @pytest.mark.parametrize("scale", [0.1, 10.0])
    def test_argmin_scale_free(self, ou, ou_series, scale):
        y = ou_series.head(1000).values
        base = minimize(WhittleObjective(periodogram(y), ou), ou)
        scaled = minimize(WhittleObjective(periodogram(scale * y), ou), ou)
        np.testing.assert_allclose(scaled.theta_hat, base.theta_hat, atol=1e-6)

    def test_argmin_scale_free_ex48(self, ex48):
        y = simulate(ex48.spec(ex48.theta0), StableParams(1.5), SimConfig(400), RngStream(13)).values
        base = whittle_estimate(y, ex48, alpha=1.5)
        for scale in (0.1, 10.0):
            res = whittle_estimate(scale * y, ex48, alpha=1.5)
            np.testing.assert_allclose(res.theta_hat, base.theta_hat, atol=1e-6)

    def test_zero_series(self, ou):
        res = whittle_estimate(np.zeros(100), ou, alpha=1.5)
        assert res.failure == "constant objective"

    def test_to_dict(self, ou, ou_series):
        d = whittle_estimate(ou_series.head(500), ou, alpha=1.5).to_dict()
        assert d["estimator"] == "whittle" and len(d["theta_hat"]) == 1 and d["n"] == 500

    def test_gaussian_default(self, ou, ou_series):
        assert whittle_estimate(ou_series.head(200), ou).extra["objective"] == "adjusted"
