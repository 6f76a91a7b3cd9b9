import math

import numpy as np
import pytest

from models.carma import (
    CarmaSpec,
    carma21_kernel_closed_form,
    companion,
    kernel,
    load_family,
    matrix_exp,
    spectral_density_continuous,
    validate,
)
from utils import ConfigError


class TestCompanion:
    def test_ou(self, ou):
        np.testing.assert_array_equal(ou.spec([-1.0]).A, [[-1.0]])

    def test_ex47(self, ex47):
        np.testing.assert_allclose(ex47.spec([-3.0]).A, [[0, 1], [-6, -5]])

    def test_ex48(self, ex48):
        np.testing.assert_allclose(ex48.spec(ex48.theta0).A, [[0, 1], [-0.0893, -1.9647]])

    def test_reject_zero_last(self):
        with pytest.raises(ConfigError):
            companion([1.0, 0.0])

    def test_eigenvalues_are_roots(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = rng.uniform(0.1, 3, size=4)
            eig = np.sort_complex(np.linalg.eigvals(companion(a)))
            roots = np.sort_complex(np.roots(np.r_[1, a]))
            np.testing.assert_allclose(eig, roots, atol=1e-9)


class TestMatrixExp:
    def test_scalar(self):
        assert matrix_exp([[-1.0]], 1.0)[0, 0] == pytest.approx(math.exp(-1), rel=1e-12)

    def test_zero_time(self):
        np.testing.assert_array_equal(matrix_exp(companion([5.0, 6.0]), 0.0), np.eye(2))

    def test_spectrum(self, ex47):
        E = matrix_exp(ex47.spec([-3.0]).A, 0.7)
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(E).real), np.exp([-3 * 0.7, -2 * 0.7]), rtol=1e-12)

    def test_stack(self):
        A = companion([1.0, 0.5])
        t = np.array([0.1, 0.5, 2.0])
        E = matrix_exp(A, t)
        for k, tk in enumerate(t):
            np.testing.assert_allclose(E[k], matrix_exp(A, tk), rtol=1e-13)


class TestKernel:
    def test_ou(self, ou):
        assert kernel(ou.spec([-1.0]), 1.0) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_negative_time(self, ex48):
        assert kernel(ex48.spec(ex48.theta0), -0.5) == 0

    def test_ex48_value(self, ex48):
        g = 0.0692 * math.exp(-0.0465) + 0.9307 * math.exp(-1.9181)
        assert kernel(ex48.spec(ex48.theta0), 1.0) == pytest.approx(g, abs=2e-4)

    @pytest.mark.parametrize("name", ["OU", "CARMA20_EX47", "CARMA21_EX48"])
    def test_decay(self, name):
        fam = load_family(name)
        t = 50.0 if name != "CARMA21_EX48" else 600.0  # slowest eigenvalue -0.0465
        assert abs(kernel(fam.spec(fam.theta0), t)) < 1e-10


class TestClosedForm:
    def test_exponents(self, ex48):
        th1, th2, _ = ex48.theta0
        sd = math.sqrt(th1**2 - 4 * th2)
        assert (th1 + sd) / 2 == pytest.approx(1.9181, abs=1e-4)
        assert (th1 - sd) / 2 == pytest.approx(0.0465, abs=1e-4)

    def test_unit_start(self, ex48):
        assert carma21_kernel_closed_form(ex48.theta0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_weights(self, ex48):
        t = np.array([0.5, 2.0, 30.0])
        expected = 0.0692 * np.exp(-0.04656 * t) + 0.9308 * np.exp(-1.91814 * t)
        np.testing.assert_allclose(kernel(ex48.spec(ex48.theta0), t), expected, atol=1e-4)
        assert (carma21_kernel_closed_form(ex48.theta0, np.linspace(0, 200, 101)) > 0).all()

    def test_matches_kernel(self, ex48):
        rng = np.random.default_rng(1)
        t = np.linspace(0, 20, 201)
        n = 0
        while n < 20:
            th = rng.uniform(*ex48.bounds.T)
            if th[0] ** 2 - 4 * th[1] <= 1e-3:
                continue
            np.testing.assert_allclose(carma21_kernel_closed_form(th, t), kernel(ex48.spec(th), t), atol=1e-10)
            n += 1

    def test_reject_complex_roots(self):
        with pytest.raises(ConfigError):
            carma21_kernel_closed_form([1.0, 1.0, 0.5], 1.0)


class TestValidate:
    def test_ex47(self, ex47):
        report = validate(ex47.spec([-3.0]))
        assert report.passed
        np.testing.assert_allclose(np.sort(report.eigenvalues.real), [-3, -2])

    def test_unstable_ou(self, ou):
        report = validate(CarmaSpec((-0.5,), (1.0,)))
        assert not report.stable and not report
        assert "stable" in report.reason()

    def test_ex48(self, ex48):
        report = validate(ex48.spec(ex48.theta0))
        assert report.passed
        np.testing.assert_allclose(np.sort(report.eigenvalues.real), [-1.9181, -0.0465], atol=1e-4)

    def test_cancellation(self, ex48):
        # MA root -theta3 equals the eigenvalue -1
        assert not validate(ex48.spec([3.0, 2.0, 1.0])).no_cancellation

    def test_sampling_strip(self):
        report = validate(CarmaSpec((0.2, 40.0), (1.0, 0.0), delta=1.0))  # eigenvalues -0.1 +- 6.32i
        assert report.stable and not report.sampling_strip


class TestFamilies:
    def test_generic_matches_ex48(self, ex48):
        gen = load_family({"family": "GENERIC", "p": 2, "q": 1, "bounds": ex48.bounds.tolist()})
        a, b = gen.spec(ex48.theta0), ex48.spec(ex48.theta0)
        assert (a.a, a.c) == (b.a, b.c)

    def test_yaml_generic(self):
        fam = load_family("models/carma32.yaml")
        assert fam.dim == 5 and validate(fam.spec(fam.theta0)).passed

    def test_unknown(self):
        with pytest.raises(ConfigError):
            load_family("ARMA")

    def test_theta0_interior(self):
        with pytest.raises(ConfigError):
            load_family("OU", theta0=[-5.0])

    def test_dimension(self, ex48):
        with pytest.raises(ConfigError):
            ex48.spec([1.0, 0.1])


def test_continuous_density_ou(ou):
    w = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(spectral_density_continuous(w, ou.spec([-1.0]), 2.0), 2.0 / (2 * np.pi) / (1 + w**2))
