"""
Limit objects of the alpha-scaled Whittle function and of the sample autocovariances: the sampled transfer
function, G and its skewness decomposition (beta, beta+, beta-), W_OU, and simulation of the alpha/2-stable limits.
"""

from dataclasses import asdict, dataclass
from multiprocessing.pool import ThreadPool

import numpy as np
import pandas as pd
from scipy.integrate import quad, trapezoid
from scipy.linalg import solve_discrete_lyapunov
from scipy.optimize import bisect
from tqdm import tqdm

from models.carma import CarmaSpec, ParamFamily, kernel, matrix_exp
from models.kalman import OMEGA_POINTS, pi_abs2, solve_riccati
from models.stable import RngStream, StableParams, rvs, tail_constant
from utils import ConfigError, NumericalError, TryExcept
from utils.general import NUM_THREADS, TQDM_BAR_FORMAT, colorstr

PREFIX = colorstr("limit: ")
U_GRID = 257  # coarse u-grid for locating sign changes of G
QUAD_TOL = 1e-9
LIMIT_STEPS = 512  # subintervals of [0, delta] in the limit simulation


def omega_grid(points=OMEGA_POINTS):
    """Periodic trapezoid nodes on [-pi, pi)."""
    return -np.pi + 2 * np.pi * np.arange(points) / points


def _resolvent(spec0: CarmaSpec, omega):
    """e^(-i omega) (I - Phi e^(-i omega))^(-1) e_p for every omega, shape (len(omega), p)."""
    p = spec0.p
    e = np.exp(-1j * np.asarray(omega, dtype=float))
    M = np.eye(p)[None] - e[:, None, None] * spec0.phi()[None]
    try:
        x = np.linalg.solve(M, np.broadcast_to(spec0.ep.astype(complex), (e.size, p))[..., None])[..., 0]
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"singular resolvent in sampled transfer function: {err}") from err
    return x * e[:, None]


def _rows(spec0: CarmaSpec, s):
    """Row vectors c' e^(A(delta - s)), shape (len(s), p)."""
    return matrix_exp(spec0.A, spec0.delta - np.asarray(s, dtype=float)).transpose(0, 2, 1) @ spec0.cvec


def sampled_transfer(spec0: CarmaSpec, s, omega):
    """sum_j g(delta j - s) e^(-ij omega) in closed form for s in [0, delta]; array of shape (len(s), len(omega))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any((s < 0) | (s > spec0.delta)):
        raise ConfigError(f"s must lie in [0, {spec0.delta}]")
    T = _rows(spec0, s) @ _resolvent(spec0, np.atleast_1d(omega)).T
    return T + np.where(s == 0, kernel(spec0, 0.0), 0.0)[:, None]


class GFunction:
    """G(u) = (2 pi)^-1 int [|Pi_theta|^2 - |Pi_theta0|^2] |T(u, omega)|^2 d omega by the periodic trapezoid rule."""

    def __init__(self, theta, theta0, family: ParamFamily, delta=1.0, points=OMEGA_POINTS):
        self.spec0 = family.spec(theta0, delta)
        omega = omega_grid(points)
        pi2 = pi_abs2(omega, solve_riccati(family.spec(theta, delta)))
        self.weight = pi2 - pi_abs2(omega, solve_riccati(self.spec0))
        self.X = _resolvent(self.spec0, omega)
        self.g0 = kernel(self.spec0, 0.0)

    def __call__(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        T = _rows(self.spec0, u) @ self.X.T + np.where(u == 0, self.g0, 0.0)[:, None]
        G = np.abs(T) ** 2 @ self.weight / self.weight.size
        return float(G[0]) if scalar else G


def big_G(theta, theta0, family: ParamFamily, u, delta=1.0, points=OMEGA_POINTS):
    """G at the points `u` of [0, delta]."""
    return GFunction(theta, theta0, family, delta, points)(u)


def _sign_split(G, delta, alpha, grid=U_GRID, tol=QUAD_TOL):
    """Integrals of (G+)^(alpha/2) and (G-)^(alpha/2) over [0, delta], split at bisected sign changes of G."""
    u = np.linspace(0, delta, grid)
    g = G(u)
    sgn = np.sign(g)
    breaks = [0.0]
    for i in range(grid - 1):
        if sgn[i] * sgn[i + 1] < 0:
            breaks.append(bisect(G, u[i], u[i + 1], xtol=1e-14))
        elif sgn[i + 1] == 0 and 0 < i + 1 < grid - 1:
            breaks.append(u[i + 1])
    breaks.append(delta)
    plus = minus = err_plus = err_minus = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        mid = G((a + b) / 2)
        val, err = quad(lambda x: abs(G(x)) ** (alpha / 2), a, b, epsabs=tol, epsrel=tol, limit=200)
        if mid >= 0:
            plus, err_plus = plus + val, err_plus + err
        else:
            minus, err_minus = minus + val, err_minus + err
    return plus, minus, err_plus, err_minus


@dataclass
class BetaDiagnostic:
    theta: tuple
    theta0: tuple
    beta: float
    beta_plus: float
    beta_minus: float
    sigma_scale: float
    err_plus: float = 0.0
    err_minus: float = 0.0

    def to_dict(self):
        return asdict(self)


def _scale(alpha, sigma, mass):
    """Scale of an alpha/2-stable integral with int |G|^(alpha/2) = `mass`."""
    return (sigma**alpha * tail_constant(alpha) / tail_constant(alpha / 2) * mass) ** (2 / alpha)


def beta_diag(theta, theta0, family: ParamFamily, alpha, sigma=1.0, delta=1.0, points=OMEGA_POINTS) -> BetaDiagnostic:
    """Skewness beta, its parts beta+/beta- and the scale of the limit of W(theta) - W(theta0)."""
    if not 0 < alpha < 2:
        raise ConfigError(f"alpha={alpha} must lie in (0, 2)")
    theta, theta0 = family.check(theta), family.check(theta0)
    key = tuple(theta.tolist()), tuple(theta0.tolist())
    if np.array_equal(theta, theta0):
        return BetaDiagnostic(*key, 0.0, 0.0, 0.0, 0.0)
    G = GFunction(theta, theta0, family, delta, points)
    plus, minus, ep, em = _sign_split(G, delta, alpha)
    total = plus + minus
    beta = (plus - minus) / total if total > 0 else 0.0
    return BetaDiagnostic(*key, beta, plus, minus, _scale(alpha, sigma, total), ep, em)


def w_ou(theta, theta0, delta=1.0, points=OMEGA_POINTS):
    """(2 pi)^-1 int |1 - e^(theta delta + i w)|^2 / |1 - e^(theta0 delta + i w)|^2 dw, trapezoid rule."""
    if not (theta < 0 and theta0 < 0):
        raise ConfigError(f"OU parameters must be negative, got theta={theta}, theta0={theta0}")
    omega = np.linspace(-np.pi, np.pi, points + 1)
    e = np.exp(1j * omega)
    f = np.abs(1 - np.exp(theta * delta) * e) ** 2 / np.abs(1 - np.exp(theta0 * delta) * e) ** 2
    return float(trapezoid(f, omega) / (2 * np.pi))


def ou_limit_scale(theta0, alpha, sigma=1.0, delta=1.0):
    """Scale of the positive alpha/2-stable variable int_0^delta e^(2 theta0 (delta - s)) dL_s^(alpha/2)."""
    mass = (np.exp(alpha * theta0 * delta) - 1) / (alpha * theta0)
    return _scale(alpha, sigma, mass)


def limit_increments(alpha, sigma, dt):
    """Law of the totally skewed alpha/2-stable increments driving the limits over steps of length `dt`."""
    s1 = sigma**2 * (tail_constant(alpha) / tail_constant(alpha / 2)) ** (2 / alpha)
    return StableParams(alpha / 2, s1 * dt ** (2 / alpha), 1.0, 0.0)


def simulate_limit_W(family: ParamFamily, theta_grid, theta0, alpha, sigma=1.0, reps=1000, rng=None, delta=1.0,
                     m=LIMIT_STEPS, points=OMEGA_POINTS):
    """Joint draws (reps x len(theta_grid)) of the limit W(theta) = int_0^delta H(theta, u) dL_u^(alpha/2)."""
    if reps < 1:
        raise ConfigError(f"need reps >= 1, got {reps}")
    rng = rng or RngStream()
    spec0 = family.spec(theta0, delta)
    omega = omega_grid(points)
    u = (np.arange(1, m + 1) - 0.5) * delta / m
    T2 = np.abs(_rows(spec0, u) @ _resolvent(spec0, omega).T) ** 2  # (m, points)
    grid = np.atleast_2d(np.asarray(theta_grid, dtype=float).reshape(len(theta_grid), -1))
    H = np.stack([T2 @ pi_abs2(omega, solve_riccati(family.spec(th, delta))) / points for th in grid])
    dL = rvs(limit_increments(alpha, sigma, delta / m), (reps, m), rng)
    return dL @ H.T


@dataclass
class StableLimit:
    lag: int
    scale: float
    skew: float
    beta_plus: float
    beta_minus: float

    def law(self, alpha):
        """The alpha/2-stable law of the limit."""
        return StableParams(alpha / 2, self.scale, float(np.clip(self.skew, -1, 1)), 0.0)


class AcvfKernel:
    """G_h(s) = sum_j g(delta j - s) g(delta (j + h) - s) on [0, delta] via a discrete Lyapunov solution."""

    def __init__(self, spec0: CarmaSpec, h=0):
        self.spec0, self.h = spec0, int(h)
        phi = spec0.phi()
        c = spec0.cvec
        self.P = solve_discrete_lyapunov(phi.T, np.outer(c, c))  # sum_k (Phi')^k c c' Phi^k
        self.Ph = self.P @ np.linalg.matrix_power(phi, self.h)
        self.g0h = kernel(spec0, 0.0) * kernel(spec0, self.h * spec0.delta)

    def __call__(self, s):
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        v = matrix_exp(self.spec0.A, self.spec0.delta - s)[..., :, -1]  # e^(A(delta - s)) e_p
        G = np.einsum("ni,ij,nj->n", v, self.Ph, v) + np.where(s == 0, self.g0h, 0.0)
        return float(G[0]) if scalar else G


def acvf_limit_params(family: ParamFamily, theta0, alpha, sigma=1.0, h=0, delta=1.0):
    """Stable scale and skewness of the limit of n^(1 - 2/alpha) gamma_n(h); a list of lags gives a list of limits."""
    if not 0 < alpha < 2:
        raise ConfigError(f"alpha={alpha} must lie in (0, 2)")
    spec0 = family.spec(theta0, delta)
    lags = np.atleast_1d(h)
    if np.any(lags < 0):
        raise ConfigError(f"lags must be >= 0, got {lags.tolist()}")
    out = []
    for lag in lags:
        plus, minus, _, _ = _sign_split(AcvfKernel(spec0, lag), delta, alpha)
        total = plus + minus
        skew = (plus - minus) / total if total > 0 else 0.0
        out.append(StableLimit(int(lag), _scale(alpha, sigma, total), skew, plus, minus))
    return out[0] if np.ndim(h) == 0 else out


def sweep_grid(family: ParamFamily, theta0, num=41, grid=None):
    """Per-coordinate sweeps over the box holding the other coordinates at theta0; theta0 itself is always included."""
    theta0 = family.check(theta0)
    rows = []
    for k in range(family.dim):
        values = grid.get(family.names[k], grid.get(k)) if isinstance(grid, dict) else None
        if values is None:
            values = np.linspace(*family.bounds[k], num)
        values = np.unique(np.r_[np.asarray(values, dtype=float), theta0[k]])
        for v in values:
            th = theta0.copy()
            th[k] = v
            rows.append((family.names[k], v, th))
    return rows


def beta_grid(family: ParamFamily, theta0, alpha, num=41, grid=None, sigma=1.0, delta=1.0, threads=NUM_THREADS):
    """Table of (coordinate, theta, beta, beta_plus, beta_minus) along one-dimensional sweeps through theta0."""
    rows = sweep_grid(family, theta0, num, grid)

    def one(row):
        name, v, th = row
        with TryExcept(f"{PREFIX}{name}={v:.6g} skipped") as te:
            d = beta_diag(th, theta0, family, alpha, sigma, delta)
        if te.error:
            return None
        return {"coordinate": name, "theta": v, "beta": d.beta, "beta_plus": d.beta_plus, "beta_minus": d.beta_minus}

    with ThreadPool(max(1, threads)) as pool:
        pbar = tqdm(pool.imap(one, rows), total=len(rows), desc=f"{PREFIX}beta grid", bar_format=TQDM_BAR_FORMAT)
        results = list(pbar)
    df = pd.DataFrame([r for r in results if r is not None])
    if family.dim == 1 and len(df):
        df = df.drop(columns="coordinate")
    return df
