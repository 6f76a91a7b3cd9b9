"""Steady-state Kalman quantities of a sampled CARMA process: Riccati solution, gain, transfer polynomial Pi."""

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from models.carma import CarmaSpec, ParamFamily, matrix_exp, validate
from utils import ConfigError, NumericalError
from utils.general import LOGGER, colorstr

GL_NODES = 64  # Gauss-Legendre nodes for integrals over [0, delta]
OMEGA_POINTS = 2**12  # periodic trapezoid points on [-pi, pi)
RICCATI_MAX_ITER = 100_000
PREFIX = colorstr("kalman: ")


def gramian(A, delta):
    """Controllability Gramian int_0^delta e^(Au) e_p e_p' e^(A'u) du by Van Loan's augmented-block exponential."""
    return _transition(A, delta)[1]


def _transition(A, delta):
    """Returns (e^(A delta), Gramian over [0, delta]) from one block exponential."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    p = A.shape[0]
    M = np.zeros((2 * p, 2 * p))
    M[:p, :p] = -A
    M[p - 1, 2 * p - 1] = 1.0  # e_p e_p'
    M[p:, p:] = A.T
    C = expm(M * delta)
    phi = C[p:, p:].T
    Q = phi @ C[:p, p:]
    return phi, (Q + Q.T) / 2


def riccati_map(omega_mat, phi, Q, c):
    """One step of the prediction Riccati recursion."""
    v = phi @ omega_mat @ c
    s = c @ omega_mat @ c
    if not s > 0:
        raise NumericalError(f"singular innovation variance c'Omega c={s:.3g}")
    out = phi @ omega_mat @ phi.T + Q - np.outer(v, v) / s
    return (out + out.T) / 2


@dataclass(frozen=True, eq=False)
class TransferArtifacts:
    spec: CarmaSpec
    phi: np.ndarray  # e^(A delta)
    Q: np.ndarray  # Gramian over one sampling step
    omega_mat: np.ndarray  # steady-state prediction covariance
    gain: np.ndarray  # Kalman gain K
    residual: float  # Frobenius norm of R(Omega) - Omega
    iterations: int

    @property
    def innovation_scale(self):
        """c' Omega c, the innovation variance per unit driver variance."""
        c = self.spec.cvec
        return float(c @ self.omega_mat @ c)


def solve_riccati(spec: CarmaSpec, tol=1e-13, rtol=1e-12, max_iter=RICCATI_MAX_ITER) -> TransferArtifacts:
    """Fixed-point iteration of the Riccati map started at the Gramian; returns the steady-state artifacts."""
    report = validate(spec)
    if not report:
        raise ConfigError(f"model a={spec.a}, c={spec.c} is not admissible ({report.reason()})")
    phi, Q = _transition(spec.A, spec.delta)
    c = spec.cvec
    scale = max(1.0, np.linalg.norm(Q))
    om, residual = Q, np.inf
    for i in range(1, max_iter + 1):
        nxt = riccati_map(om, phi, Q, c)
        change = np.linalg.norm(nxt - om)
        om = nxt
        if change < tol * scale:
            break
        if i % 16 == 0 and np.linalg.norm(riccati_map(om, phi, Q, c) - om) < rtol * scale:
            break
    else:
        raise NumericalError(f"Riccati iteration did not converge in {max_iter} steps (last change {change:.3g})")
    residual = float(np.linalg.norm(riccati_map(om, phi, Q, c) - om))
    s = c @ om @ c
    if not s > 1e-300:
        raise NumericalError(f"singular gain denominator c'Omega c={s:.3g}")
    gain = phi @ om @ c / s
    if i > 10_000:
        LOGGER.warning(f"{PREFIX}WARNING ⚠️ Riccati iteration needed {i} steps for a={spec.a}, c={spec.c}")
    return TransferArtifacts(spec, phi, Q, om, gain, residual, i)


def pi(z, art: TransferArtifacts):
    """Transfer polynomial Pi(z) = 1 - c'(I - (Phi - K c') z)^(-1) K z; vectorised over `z`."""
    z = np.asarray(z, dtype=complex)
    zz = z.reshape(-1)
    c, K = art.spec.cvec, art.gain
    F = art.phi - np.outer(K, c)
    p = F.shape[0]
    M = np.eye(p)[None] - zz[:, None, None] * F[None]
    try:
        x = np.linalg.solve(M, np.broadcast_to(K[None, :, None], (zz.size, p, 1)).astype(complex))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"singular resolvent in Pi(z): {e}") from e
    out = 1 - zz * (x[..., 0] @ c)
    return complex(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def pi_abs2(omega, art: TransferArtifacts):
    """|Pi(e^(i omega))|^2 at the frequencies `omega`."""
    return np.abs(pi(np.exp(1j * np.asarray(omega, dtype=float)), art)) ** 2


def pi_inverse_coeffs(art: TransferArtifacts, J):
    """Coefficients psi_j = c' Phi^(j-1) K, j = 1..J, of Pi(z)^(-1) = 1 + sum_j psi_j z^j."""
    if J < 1:
        raise ConfigError(f"truncation J={J} must be >= 1")
    c, x = art.spec.cvec, art.gain.copy()
    psi = np.empty(J)
    for j in range(J):
        psi[j] = c @ x
        x = art.phi @ x
    return psi


def tail_bound(art: TransferArtifacts, psi):
    """Geometric bound |psi_j| <= C rho^j with rho the spectral radius of Phi; returns (C, rho)."""
    rho = float(np.max(np.abs(np.linalg.eigvals(art.phi))))
    j = np.arange(1, len(psi) + 1)
    C = float(np.max(np.abs(psi) / rho**j)) if rho > 0 else 0.0
    return C, rho


def innovation_variance(art: TransferArtifacts, sigma_L2=1.0):
    """Variance sigma_L2 c' Omega c of the linear innovations."""
    return sigma_L2 * art.innovation_scale


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    omega: np.ndarray
    integral: np.ndarray  # quadrature form over one sampling step
    transfer: np.ndarray  # innovation variance over |Pi|^2 form
    rel_diff: float


def spectral_density_sampled(omega, art: TransferArtifacts, sigma_L2=1.0, nodes=GL_NODES, rtol=1e-6):
    """Spectral density of the sampled process evaluated by quadrature and through Pi; both forms returned."""
    spec = art.spec
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    p = spec.p
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = (x + 1) * spec.delta / 2
    w = w * spec.delta / 2
    rows = matrix_exp(spec.A, u).transpose(0, 2, 1) @ spec.cvec  # c' e^(Au), shape (nodes, p)
    M = np.eye(p)[None] - np.exp(1j * omega)[:, None, None] * art.phi[None]
    try:
        r = np.linalg.solve(M, np.broadcast_to(spec.ep.astype(complex), (omega.size, p))[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"singular resolvent in spectral density: {e}") from e
    f_int = sigma_L2 / (2 * np.pi) * (w @ np.abs(rows @ r.T) ** 2)
    f_pi = innovation_variance(art, sigma_L2) / (2 * np.pi * pi_abs2(omega, art))
    rel = float(np.max(np.abs(f_int - f_pi) / np.maximum(np.abs(f_pi), 1e-300)))
    if rel > rtol:
        LOGGER.warning(f"{PREFIX}WARNING ⚠️ spectral density forms disagree, max relative difference {rel:.3g}")
    return SpectralDensity(omega, f_int, f_pi, rel)


def sigma_WA(theta0, family: ParamFamily, delta=1.0, step=1e-5, points=OMEGA_POINTS):
    """Asymptotic covariance 4 pi [int grad log|Pi|^-2 grad' log|Pi|^-2 d omega]^(-1) of the adjusted estimator."""
    theta0 = family.check(theta0)
    omega = -np.pi + 2 * np.pi * np.arange(points) / points
    grads = np.empty((family.dim, points))
    for k in range(family.dim):
        e = np.zeros(family.dim)
        e[k] = step
        up = -np.log(pi_abs2(omega, solve_riccati(family.spec(theta0 + e, delta))))
        dn = -np.log(pi_abs2(omega, solve_riccati(family.spec(theta0 - e, delta))))
        grads[k] = (up - dn) / (2 * step)
    info = grads @ grads.T * (2 * np.pi / points)
    if np.linalg.cond(info) > 1e12:
        raise NumericalError(f"singular information matrix, condition number {np.linalg.cond(info):.3g}")
    out = 4 * np.pi * np.linalg.inv(info)
    return (out + out.T) / 2


class ArtifactCache:
    """Thread-safe LRU cache of TransferArtifacts keyed by theta, shared by the objective evaluations of one fit."""

    def __init__(self, family: ParamFamily, delta=1.0, maxsize=4096):
        self.family = family
        self.delta = delta
        self.maxsize = maxsize
        self._cache = OrderedDict()
        self._lock = threading.Lock()
        self.hits = self.misses = 0

    def __call__(self, theta):
        """Artifacts at `theta`, or None when the model there is inadmissible or the Riccati solve fails."""
        key = tuple(np.round(np.asarray(theta, dtype=float), 15))
        with self._lock:
            if key in self._cache:
                self.hits += 1
                self._cache.move_to_end(key)
                return self._cache[key]
        try:
            art = solve_riccati(self.family.spec(key, self.delta))
        except (ConfigError, NumericalError):
            art = None
        with self._lock:
            self.misses += 1
            self._cache[key] = art
            if len(self._cache) > self.maxsize:
                self._cache.popitem(last=False)
        return art
