import numpy as np
import pytest

from utils import ConfigError
from utils.spectral import (
    acvf,
    fourier_freqs,
    periodogram,
    periodogram_acvf,
    periodogram_direct,
    sample_acvf,
    series_values,
)


def test_fourier_freqs():
    w = fourier_freqs(4)
    assert w.size == 8
    assert w[0] == pytest.approx(-3 * np.pi / 4) and w[-1] == pytest.approx(np.pi)
    with pytest.raises(ConfigError):
        fourier_freqs(0)


class TestAcvf:
    def test_alternating(self):
        y = [1.0, -1.0, 1.0, -1.0]
        assert sample_acvf(y, 0) == pytest.approx(1.0)
        assert sample_acvf(y, 1) == pytest.approx(-0.75)
        assert sample_acvf(y, -1) == sample_acvf(y, 1)

    def test_uncentered(self):
        assert sample_acvf(np.full(10, 2.0), 3) == pytest.approx(4 * 7 / 10)

    def test_lag_too_large(self):
        with pytest.raises(ConfigError):
            sample_acvf([1.0, 2.0], 2)

    def test_vector_matches_scalar(self):
        y = np.random.default_rng(0).standard_normal(50)
        np.testing.assert_allclose(acvf(y, 10), [sample_acvf(y, h) for h in range(11)], atol=1e-13)

    def test_series_values(self):
        with pytest.raises(ConfigError):
            series_values(np.zeros((2, 2)))
        with pytest.raises(ConfigError):
            series_values([])
        with pytest.raises(ConfigError, match="non-finite"):
            series_values([1.0, np.nan])
        with pytest.raises(ConfigError, match="not numeric"):
            series_values(["a", "b"])


class TestPeriodogram:
    @pytest.mark.parametrize("n", [7, 64, 513])
    def test_dual_forms(self, n):
        y = np.random.default_rng(n).standard_t(3, n)
        I = periodogram(y)
        np.testing.assert_allclose(I.freqs, fourier_freqs(n))
        scale = I.values.max()
        np.testing.assert_allclose(periodogram_direct(y), I.values, atol=1e-10 * scale)
        np.testing.assert_allclose(periodogram_acvf(y), I.values, atol=1e-10 * scale)

    def test_parseval(self):
        y = np.random.default_rng(1).standard_normal(200)
        I = periodogram(y)
        assert I.n == 200
        assert np.pi / I.n * I.values.sum() == pytest.approx(sample_acvf(y, 0), rel=1e-12)

    def test_zero_series(self):
        assert np.all(periodogram(np.zeros(16)).values == 0)

    def test_single_observation(self):
        I = periodogram([1.0])
        np.testing.assert_allclose(I.freqs, [0.0, np.pi])
        np.testing.assert_allclose(I.values, 1 / (2 * np.pi))

    def test_even_and_nonnegative(self):
        I = periodogram(np.random.default_rng(2).standard_normal(33))
        assert np.all(I.values >= 0)
        np.testing.assert_allclose(I.values[:-1], I.values[-2::-1], rtol=1e-10)
