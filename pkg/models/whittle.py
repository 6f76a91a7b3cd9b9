"""
Whittle objectives (classical, adjusted and alpha-scaled) and their multistart Nelder-Mead minimisation over the
parameter box.

Usage:
    from models.whittle import whittle_estimate
    result = whittle_estimate(series, load_family("OU"), alpha=1.5)
"""

import itertools
from dataclasses import asdict, dataclass, field
from multiprocessing.pool import ThreadPool

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from models.carma import ParamFamily
from models.kalman import ArtifactCache, TransferArtifacts, pi
from utils import ConfigError
from utils.general import LOGGER, colorstr
from utils.spectral import Periodogram, periodogram

PREFIX = colorstr("whittle: ")
BIG = 1e300  # stand-in for +inf inside the simplex


def _pi_abs2(I: Periodogram, art: TransferArtifacts):
    return np.abs(pi(np.exp(1j * I.freqs), art)) ** 2


def whittle_classical(I: Periodogram, provider, theta, sigma_L2=1.0):
    """(1/2n) sum_j [I_n(w_j) / f(w_j) + log f(w_j)] with f the sampled spectral density."""
    art = provider(theta)
    if art is None:
        return np.inf
    f = sigma_L2 * art.innovation_scale / (2 * np.pi * _pi_abs2(I, art))
    if not np.all(f > 0):
        return np.inf
    return float(np.sum(I.values / f + np.log(f)) / (2 * I.n))


def whittle_adjusted(I: Periodogram, provider, theta):
    """(pi/n) sum_j |Pi(e^(i w_j))|^2 I_n(w_j); free of the driver scale."""
    art = provider(theta)
    if art is None:
        return np.inf
    return float(np.pi / I.n * (_pi_abs2(I, art) @ I.values))


def whittle_alpha(I: Periodogram, provider, theta, alpha):
    """Adjusted objective rescaled for alpha-stable data, n^(1 - 2/alpha) times the adjusted value."""
    if not 0 < alpha <= 2:
        raise ConfigError(f"alpha={alpha} must lie in (0, 2]")
    return I.n ** (1 - 2 / alpha) * whittle_adjusted(I, provider, theta)


OBJECTIVES = ("adjusted", "alpha", "classical")


class WhittleObjective:
    """Callable theta -> objective value of one periodogram, sharing a Riccati artifact cache across evaluations."""

    def __init__(self, I: Periodogram, family: ParamFamily, delta=1.0, kind="adjusted", alpha=None, sigma_L2=1.0):
        if kind not in OBJECTIVES:
            raise ConfigError(f"unknown objective '{kind}', choose from {list(OBJECTIVES)}")
        if kind == "alpha" and alpha is None:
            raise ConfigError("the alpha objective needs alpha")
        self.I, self.family, self.kind, self.alpha, self.sigma_L2 = I, family, kind, alpha, sigma_L2
        self.provider = ArtifactCache(family, delta)

    def __call__(self, theta):
        if self.kind == "adjusted":
            return whittle_adjusted(self.I, self.provider, theta)
        if self.kind == "alpha":
            return whittle_alpha(self.I, self.provider, theta, self.alpha)
        return whittle_classical(self.I, self.provider, theta, self.sigma_L2)


@dataclass
class MinimizeOptions:
    xatol: float = 1e-8  # simplex diameter tolerance
    maxiter: int = 500  # per start
    max_starts: int = 11
    threads: int = 1


@dataclass
class EstimationResult:
    theta_hat: np.ndarray
    objective_value: float
    n: int
    converged: bool
    starts_used: int
    failure: str = None
    nfev: int = 0
    estimator: str = "whittle"
    extra: dict = field(default_factory=dict)

    @property
    def failed(self):
        return self.failure is not None

    def to_dict(self):
        d = asdict(self)
        d["theta_hat"] = np.asarray(self.theta_hat, dtype=float).tolist()
        return d


def start_points(family: ParamFamily, max_starts=11, objective=None):
    """Center plus the 3^d quartile grid of the box; above `max_starts` the best grid points by `objective` are kept."""
    lo, hi = family.bounds.T
    axes = [lo + f * (hi - lo) for f in (0.25, 0.5, 0.75)]
    grid = np.array(list(itertools.product(*zip(*axes))), dtype=float)
    center = family.center
    grid = grid[~np.all(np.isclose(grid, center), axis=1)]
    if len(grid) + 1 <= max_starts or objective is None:
        return np.vstack([center, grid])[:max_starts]
    values = np.array([objective(x) for x in grid])
    order = sorted(range(len(grid)), key=lambda i: (values[i], tuple(grid[i])))
    return np.vstack([center, grid[order[: max_starts - 1]]])


def minimize(objective, family: ParamFamily, options: MinimizeOptions = None, n=0) -> EstimationResult:
    """Multistart Nelder-Mead over the box of `family`; lowest value wins, ties broken by lexicographic theta."""
    options = options or MinimizeOptions()
    starts = start_points(family, options.max_starts, objective)
    bounds = [tuple(b) for b in family.bounds]

    def f(x):
        v = objective(x)
        return v if np.isfinite(v) else BIG

    def run(x0):
        res = scipy_minimize(
            f,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": options.xatol, "fatol": np.inf, "maxiter": options.maxiter},
        )
        return np.clip(res.x, *family.bounds.T), float(res.fun), bool(res.success), int(res.nfev), f(x0)

    if options.threads > 1 and len(starts) > 1:
        with ThreadPool(min(options.threads, len(starts))) as pool:
            runs = pool.map(run, starts)
    else:
        runs = [run(x0) for x0 in starts]

    nfev = sum(r[3] for r in runs)
    finite = [r for r in runs if r[1] < BIG]
    if not finite:
        return EstimationResult(np.full(family.dim, np.nan), np.inf, n, False, len(starts), "all starts failed", nfev)
    values = np.array([r[1] for r in runs] + [r[4] for r in runs])
    if np.ptp(values) == 0:
        LOGGER.warning(f"{PREFIX}WARNING ⚠️ objective is constant over all starts, returning the box center")
        return EstimationResult(family.center, float(values[0]), n, False, len(starts), "constant objective", nfev)
    x, fun, success, _, _ = min(finite, key=lambda r: (r[1], tuple(r[0])))
    return EstimationResult(x, fun, n, success, len(starts), None, nfev)


def whittle_estimate(y, family: ParamFamily, alpha=None, delta=1.0, kind=None, options=None) -> EstimationResult:
    """Adjusted Whittle estimate (alpha-scaled when `alpha` < 2) of `family` from the series `y`."""
    I = periodogram(y)
    kind = kind or ("alpha" if alpha is not None and alpha < 2 else "adjusted")
    objective = WhittleObjective(I, family, delta, kind=kind, alpha=alpha)
    result = minimize(objective, family, options, n=I.n)
    result.extra = {"objective": kind, "cache_misses": objective.provider.misses}
    if result.failed:
        LOGGER.warning(f"{PREFIX}WARNING ⚠️ {result.failure} (n={I.n})")
    elif not result.converged:
        LOGGER.info(f"{PREFIX}best start stopped at maxiter={(options or MinimizeOptions()).maxiter}")
    return result
