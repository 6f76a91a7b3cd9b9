"""
Indirect CARMA estimator: Gaussian ARMA(p, p-1) fit of the sampled series, AR roots mapped to CARMA eigenvalues by
-log(z)/delta, then MA parameters matched through the autocorrelations of the filtered series.

Second moments do not exist for alpha < 2; the autocorrelations below are formal L2 quantities of the kernels and are
used only as matching statistics.
"""

import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from statsmodels.tsa.arima.estimators.hannan_rissanen import hannan_rissanen
from statsmodels.tsa.arima.model import ARIMA

from models.carma import CarmaSpec, ParamFamily, kernel, validate
from models.whittle import MinimizeOptions, minimize
from utils import CarmaError, ConfigError, EstimationFailure
from utils.spectral import series_values

STAGES = ("arma_mle", "log_root", "ma_match")
GL_NODES = 128  # Gauss-Legendre nodes per sampling interval
FIXED_ROOT = -2.0  # fixed eigenvalue of the CARMA20_EX47 family
FIXED_ROOT_TOL = 0.5


@dataclass(frozen=True, eq=False)
class ArmaFit:
    ar: np.ndarray  # phi_1..phi_p of y_t = sum phi_i y_(t-i) + e_t + sum theta_j e_(t-j)
    ma: np.ndarray  # theta_1..theta_q
    sigma2: float = 1.0
    llf: float = np.nan

    @property
    def a_D(self):
        """Ascending coefficients (1, -phi_1, ..., -phi_p) of the AR polynomial."""
        return np.concatenate(([1.0], -np.asarray(self.ar, dtype=float)))

    @property
    def c_D(self):
        """Ascending coefficients (1, theta_1, ..., theta_q) of the MA polynomial."""
        return np.concatenate(([1.0], np.asarray(self.ma, dtype=float)))


def _stationary(coeffs):
    """True when all roots of the ascending polynomial `coeffs` lie outside the unit circle."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    return coeffs.size <= 1 or bool(np.all(np.abs(np.roots(coeffs[::-1])) > 1))


def _start_params(y, p, q):
    """Hannan-Rissanen start values, or None when they leave the stationary/invertible region."""
    try:
        params, _ = hannan_rissanen(y, ar_order=p, ma_order=q, demean=False)
    except (ValueError, np.linalg.LinAlgError):
        return None
    ar, ma = np.asarray(params.ar_params), np.asarray(params.ma_params)
    if not (_stationary(np.r_[1, -ar]) and _stationary(np.r_[1, ma]) and params.sigma2 > 0):
        return None
    return np.r_[ar, ma, params.sigma2]


def arma_mle(y, p, q=None) -> ArmaFit:
    """Gaussian ARMA(p, q) quasi-likelihood fit by the state-space prediction error decomposition, q defaults to p-1."""
    y = series_values(y)
    q = p - 1 if q is None else int(q)
    if y.size <= 10 * (p + q):
        raise ConfigError(f"ARMA({p},{q}) fit needs n > {10 * (p + q)}, got n={y.size}")
    start = _start_params(y, p, q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            model = ARIMA(y, order=(p, 0, q), trend="n", enforce_stationarity=True, enforce_invertibility=True)
            res = model.fit(start_params=start, cov_type="none")
        except (ValueError, np.linalg.LinAlgError) as e:
            raise EstimationFailure("arma_mle", str(e)) from e
    retvals = getattr(res, "mle_retvals", None) or {}
    if not retvals.get("converged", True):
        raise EstimationFailure("arma_mle", "likelihood optimizer did not converge")
    ar, ma = np.asarray(res.arparams, dtype=float), np.asarray(res.maparams, dtype=float)
    fit = ArmaFit(ar, ma, float(res.params[-1]), float(res.llf))
    if not (np.all(np.isfinite(fit.ar)) and np.all(np.isfinite(fit.ma)) and np.isfinite(fit.llf)):
        raise EstimationFailure("arma_mle", "non-finite ARMA estimates")
    return fit


def recover_lambda(a_D, delta=1.0):
    """CARMA eigenvalues -log(z_j)/delta from the roots z_j of the ascending AR polynomial `a_D`."""
    a_D = np.asarray(getattr(a_D, "a_D", a_D), dtype=float)
    z = np.roots(a_D[::-1])
    if z.size != a_D.size - 1:
        raise EstimationFailure("log_root", f"AR polynomial has {z.size} roots, expected {a_D.size - 1}")
    real = np.abs(z.imag) <= 1e-12 * np.maximum(1.0, np.abs(z))
    if np.any(real & (z.real <= 0)):
        raise EstimationFailure("log_root", f"AR root on the non-positive real axis, roots {np.round(z, 6).tolist()}")
    if np.any(np.abs(z) <= 1):
        raise EstimationFailure("log_root", f"AR root inside the unit circle, roots {np.round(z, 6).tolist()}")
    z = np.where(real, z.real + 0j, z)
    lam = -np.log(z) / delta
    return lam[np.lexsort((lam.imag, lam.real))]


def ar_parameters(lam, family: ParamFamily):
    """Maps recovered eigenvalues to the AR part of theta for `family`."""
    lam = np.asarray(lam, dtype=complex)
    real = bool(np.all(np.abs(lam.imag) < 1e-10))
    if family.family == "OU":
        return np.array([lam[0].real])
    if family.family == "CARMA20_EX47":
        if not real:
            raise EstimationFailure("log_root", f"complex eigenvalues {lam.tolist()}, family has real eigenvalues")
        i = int(np.argmin(np.abs(lam.real - FIXED_ROOT)))
        if abs(lam[i].real - FIXED_ROOT) > FIXED_ROOT_TOL:
            raise EstimationFailure("log_root", f"fixed eigenvalue {FIXED_ROOT} missed, recovered {lam.real.tolist()}")
        return np.array([lam[1 - i].real])
    coeffs = np.poly(lam).real  # z^p + a_1 z^(p-1) + ... + a_p
    return coeffs[1:]


def filtered_kernel(spec: CarmaSpec, a_D, s):
    """Kernel h(s) = sum_i d_i g(s - i delta) of the filtered series a_D(B) Y."""
    s = np.asarray(s, dtype=float)
    d = np.asarray(getattr(a_D, "a_D", a_D), dtype=float)
    h = sum(di * kernel(spec, s - i * spec.delta) for i, di in enumerate(d))
    return h


def _filtered_autocov(spec: CarmaSpec, a_D, lags, nodes=GL_NODES):
    """r(k) = int_0^(p delta) h(s) h(s + k delta) ds by Gauss-Legendre on each sampling interval."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    D, p = spec.delta, spec.p
    s = np.concatenate([i * D + (x + 1) * D / 2 for i in range(p)])
    w = np.tile(w * D / 2, p)
    h0 = filtered_kernel(spec, a_D, s)
    return np.array([w @ (h0 * filtered_kernel(spec, a_D, s + k * D)) for k in lags])


def model_acf(spec: CarmaSpec, a_D, k):
    """Formal L2 autocorrelation r(k)/r(0) of the filtered kernel; `k` may be a list of lags."""
    lags = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(lags < 0):
        raise ConfigError(f"lags must be >= 0, got {lags.tolist()}")
    r = _filtered_autocov(spec, a_D, np.r_[0, lags])
    if r[0] < 1e-14:
        raise EstimationFailure("ma_match", f"filtered kernel has vanishing L2 norm r(0)={r[0]:.3g}")
    rho = r[1:] / r[0]
    return float(rho[0]) if np.ndim(k) == 0 else rho


def ma_acf(c_D, k):
    """Autocorrelation sum_i c_i c_(i+k) / sum_i c_i^2 of an MA filter with ascending coefficients `c_D`."""
    c = np.asarray(getattr(c_D, "c_D", c_D), dtype=float)
    k = abs(int(k))
    if k >= c.size:
        return 0.0
    return float(c[: c.size - k] @ c[k:] / (c @ c))


def arma_reduction(spec: CarmaSpec) -> ArmaFit:
    """Exact ARMA(p, p-1) representation of the sampled model: AR part from the eigenvalues, MA part by factorising
    the autocovariances of the filtered kernel."""
    lam = validate(spec).eigenvalues
    a_D = np.poly(np.exp(lam * spec.delta)).real  # ascending coefficients of prod_j (1 - e^(lam_j delta) z)
    q = spec.p - 1
    if q == 0:
        return ArmaFit(-a_D[1:], np.empty(0))
    r = _filtered_autocov(spec, a_D, range(q + 1))
    roots = np.roots(np.r_[r[::-1], r[1:]])
    outside = roots[np.abs(roots) > 1]
    c_D = np.poly(1 / outside).real
    return ArmaFit(-a_D[1:], c_D[1:], float(r[0] / (c_D @ c_D)))


@dataclass
class GarciaResult:
    theta_hat: np.ndarray
    lambda_hat: np.ndarray = None
    arma_fit: ArmaFit = None
    failed: bool = False
    failure_stage: str = None
    message: str = ""
    n: int = 0
    estimator: str = "garcia"
    extra: dict = field(default_factory=dict)

    @property
    def failure(self):
        return self.failure_stage

    def to_dict(self):
        fit = self.arma_fit
        return {
            "estimator": self.estimator,
            "theta_hat": np.asarray(self.theta_hat, dtype=float).tolist(),
            "lambda_hat": None if self.lambda_hat is None else [[z.real, z.imag] for z in self.lambda_hat],
            "arma_fit": None if fit is None else {k: np.asarray(v).tolist() for k, v in asdict(fit).items()},
            "failed": self.failed,
            "failure_stage": self.failure_stage,
            "message": self.message,
            "n": self.n,
        }


def garcia_from_fit(fit: ArmaFit, family: ParamFamily, delta=1.0, options=None):
    """Eigenvalue inversion and MA matching for a given ARMA fit; returns (theta_hat, lambda_hat)."""
    lam = recover_lambda(fit.a_D, delta)
    theta = np.full(family.dim, np.nan)
    theta[list(family.ar)] = ar_parameters(lam, family)
    ma = list(family.ma)
    if not ma:
        return theta, lam

    q = len(ma)
    target = np.array([ma_acf(fit.c_D, k) for k in range(1, q + 1)])

    def objective(theta_ma):
        th = theta.copy()
        th[ma] = theta_ma
        try:
            spec = family.spec(th, delta)
            if not validate(spec):
                return np.inf
            return float(np.sum((model_acf(spec, fit.a_D, np.arange(1, q + 1)) - target) ** 2))
        except CarmaError:
            return np.inf

    sub = replace(family, bounds=family.bounds[ma], names=tuple(family.names[i] for i in ma))
    options = options or MinimizeOptions(xatol=1e-10)
    res = minimize(objective, sub, options)
    if res.failed and res.failure != "constant objective":
        raise EstimationFailure("ma_match", res.failure)
    theta[ma] = res.theta_hat
    return theta, lam


def garcia_estimate(y, family: ParamFamily, delta=1.0, options=None) -> GarciaResult:
    """Full indirect pipeline; a failing stage yields a failed result instead of an exception."""
    n = len(series_values(y))
    fit = lam = None
    try:
        fit = arma_mle(y, family.p)
        theta, lam = garcia_from_fit(fit, family, delta, options)
    except EstimationFailure as e:
        return GarciaResult(np.full(family.dim, np.nan), lam, fit, True, e.stage, str(e), n)
    return GarciaResult(theta, lam, fit, n=n)
