"""
Symmetric and skewed alpha-stable laws: characteristic exponent, tail constant and exact Chambers-Mallows-Stuck
sampling of variates and Levy increments.

Usage:
    from models.stable import StableParams, RngStream, increments
    dL = increments(StableParams(1.5), dt=0.01, n=1000, rng=RngStream(seed=0, stream_id=3))
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from utils import ConfigError

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class StableParams:
    """Parameters (alpha, sigma, beta, mu) of the stable law S_alpha(sigma, beta, mu)."""

    alpha: float
    sigma: float = 1.0
    beta: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ConfigError(f"stability index alpha={self.alpha} must lie in (0, 2]")
        if not self.sigma > 0:
            raise ConfigError(f"scale sigma={self.sigma} must be positive")
        if not -1 <= self.beta <= 1:
            raise ConfigError(f"skewness beta={self.beta} must lie in [-1, 1]")
        if not math.isfinite(self.mu):
            raise ConfigError(f"shift mu={self.mu} must be finite")

    def symmetric(self):
        """True iff the law is symmetric about zero (beta = mu = 0)."""
        return self.beta == 0 and self.mu == 0

    def scaled(self, dt):
        """Law of a Levy increment over a time step `dt`: S_alpha(sigma dt^(1/alpha), beta, mu dt)."""
        if not dt > 0:
            raise ConfigError(f"time step dt={dt} must be positive")
        return StableParams(self.alpha, self.sigma * dt ** (1 / self.alpha), self.beta, self.mu * dt)


@dataclass
class RngStream:
    """Counter-based random stream keyed by (seed, stream_id); equal keys reproduce bit-identical draws."""

    seed: int = 0
    stream_id: int = 0
    _gen: np.random.Generator = field(default=None, init=False, repr=False, compare=False)

    @property
    def generator(self):
        """Lazily built Philox generator, one key per (seed, stream_id) pair."""
        if self._gen is None:
            key = np.array([self.seed & MASK64, self.stream_id & MASK64], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def spawn(self, stream_id):
        """Returns a fresh stream sharing this seed."""
        return RngStream(self.seed, stream_id)


def char_exponent(params: StableParams, z):
    """Log characteristic function phi(z) with E exp(izZ) = exp(phi(z)); vectorised over `z`."""
    z = np.asarray(z, dtype=float)
    a, s, b, m = params.alpha, params.sigma, params.beta, params.mu
    az = np.abs(z)
    sgn = np.sign(z)
    if a == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            logz = np.where(az > 0, np.log(np.where(az > 0, az, 1.0)), 0.0)
        phi = -s * az * (1 + 1j * b * sgn * (2 / np.pi) * logz) + 1j * m * z
    else:
        phi = -(s**a) * az**a * (1 - 1j * b * sgn * np.tan(np.pi * a / 2)) + 1j * m * z
    phi = np.where(z == 0, 0.0 + 0.0j, phi)
    return complex(phi) if phi.ndim == 0 else phi


def tail_constant(alpha):
    """Tail constant C_alpha with n P(|Z| > n^(1/alpha)) -> C_alpha sigma^alpha, for 0 < alpha < 2."""
    if not 0 < alpha < 2:
        raise ConfigError(f"tail constant needs 0 < alpha < 2, got alpha={alpha}")
    if abs(alpha - 1) < 1e-12:
        return 2 / math.pi
    return (1 - alpha) / (gamma(2 - alpha) * math.cos(math.pi * alpha / 2))


def rvs(params: StableParams, size, rng: RngStream):
    """Draws `size` variates from S_alpha(sigma, beta, mu) by the Chambers-Mallows-Stuck transform."""
    g = rng.generator
    v = g.uniform(-np.pi / 2, np.pi / 2, size)  # uniform angle
    w = g.standard_exponential(size)
    a, s, b, m = params.alpha, params.sigma, params.beta, params.mu
    if a == 1:
        h = np.pi / 2 + b * v
        x = (2 / np.pi) * (h * np.tan(v) - b * np.log((np.pi / 2) * w * np.cos(v) / h))
        return s * x + (2 / np.pi) * b * s * np.log(s) + m
    if a == 2:  # Gaussian, variance 2 sigma^2
        return s * 2 * np.sin(v) * np.sqrt(w) + m
    t = b * math.tan(np.pi * a / 2)
    shift = math.atan(t) / a
    scale = (1 + t * t) ** (1 / (2 * a))
    x = (
        scale
        * np.sin(a * (v + shift))
        / np.cos(v) ** (1 / a)
        * (np.cos(v - a * (v + shift)) / w) ** ((1 - a) / a)
    )
    return s * x + m


def sample(params: StableParams, rng: RngStream):
    """One draw from S_alpha(sigma, beta, mu)."""
    return float(rvs(params, 1, rng)[0])


def increments(params: StableParams, dt, n, rng: RngStream):
    """`n` iid Levy increments over steps of length `dt`."""
    if n < 1:
        raise ConfigError(f"need n >= 1 increments, got n={n}")
    return rvs(params.scaled(dt), int(n), rng)
