"""
Simulation of alpha-stable driven CARMA paths on a fine grid, sampled every delta.

Both schemes draw the same fine-grid Levy increments from the stream, so for equal (seed, stream_id) they differ only
by the drift discretisation.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import signal

from models.carma import CarmaSpec, matrix_exp, validate
from models.stable import RngStream, StableParams, increments
from utils import ConfigError, NumericalError


@dataclass(frozen=True)
class SimConfig:
    """Fine step `step`, sampling distance `delta`, number of observations `n` and discarded time `burn_in`."""

    n: int
    step: float = 0.01
    delta: float = 1.0
    burn_in: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"need n >= 1 observations, got n={self.n}")
        if not (self.step > 0 and self.delta > 0 and self.burn_in >= 0):
            raise ConfigError(f"step={self.step}, delta={self.delta} must be positive and burn_in={self.burn_in} >= 0")
        if abs(self.substeps * self.step - self.delta) > 1e-9 * self.delta or self.substeps < 1:
            raise ConfigError(f"delta/step={self.delta / self.step:.6g} must be a positive integer")
        if abs(self.burn_blocks * self.delta - self.burn_in) > 1e-9 * max(self.delta, self.burn_in):
            raise ConfigError(f"burn_in={self.burn_in} must be a multiple of delta={self.delta}")

    @property
    def substeps(self):
        """Fine steps per sampling interval."""
        return int(round(self.delta / self.step))

    @property
    def burn_blocks(self):
        """Sampling intervals discarded before the first observation."""
        return int(round(self.burn_in / self.delta))

    @property
    def total_steps(self):
        return (self.burn_blocks + self.n) * self.substeps


@dataclass(frozen=True, eq=False)
class SampledSeries:
    values: np.ndarray  # Y_delta, ..., Y_(n delta)
    delta: float = 1.0
    provenance: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.values.size

    def __len__(self):
        return self.values.size

    def head(self, n):
        """The first `n` observations, provenance kept."""
        return SampledSeries(self.values[:n].copy(), self.delta, {**self.provenance, "n": int(n)})

    def to_frame(self):
        return pd.DataFrame({"k": np.arange(1, self.n + 1), "y": self.values})


def _check(spec: CarmaSpec, noise: StableParams, cfg: SimConfig):
    """Raises ConfigError unless the noise is symmetric and the model is admissible at the simulation delta."""
    if not noise.symmetric():
        raise ConfigError(f"driving noise must be symmetric (beta=mu=0), got beta={noise.beta}, mu={noise.mu}")
    report = validate(spec)
    if not report:
        raise ConfigError(f"model a={spec.a}, c={spec.c} is not admissible ({report.reason()})")
    if abs(spec.delta - cfg.delta) > 1e-12:
        raise ConfigError(f"model delta={spec.delta} differs from simulation delta={cfg.delta}")


def _series(y, spec, noise, cfg, rng, scheme):
    """Wraps sampled values with provenance; a non-finite path raises NumericalError."""
    if not np.all(np.isfinite(y)):
        k = int(np.argmin(np.isfinite(y)))
        raise NumericalError(f"{scheme} path became non-finite at observation {k + 1}, try a step below {cfg.step}")
    provenance = {
        "scheme": scheme,
        "seed": rng.seed,
        "stream_id": rng.stream_id,
        "step": cfg.step,
        "delta": cfg.delta,
        "burn_in": cfg.burn_in,
        "n": cfg.n,
        "a": list(spec.a),
        "c": list(spec.c),
        "alpha": noise.alpha,
        "sigma": noise.sigma,
    }
    return SampledSeries(np.ascontiguousarray(y), cfg.delta, provenance)


def euler_maruyama(spec: CarmaSpec, noise: StableParams, cfg: SimConfig, rng: RngStream) -> SampledSeries:
    """Euler scheme X_(t+h) = (I + hA) X_t + e_p dL from X_0 = 0, with Y = c'X recorded every delta after burn_in."""
    _check(spec, noise, cfg)
    dL = increments(noise, cfg.step, cfg.total_steps, rng)
    F = np.eye(spec.p) + cfg.step * spec.A
    num, den = signal.ss2tf(F, spec.ep[:, None], spec.cvec[None, :], np.zeros((1, 1)))
    with np.errstate(over="ignore", invalid="ignore"):
        y = signal.lfilter(num[0], den, np.append(dL, 0.0))  # y[j] = c'X_j
    idx = (cfg.burn_blocks + np.arange(1, cfg.n + 1)) * cfg.substeps
    return _series(y[idx], spec, noise, cfg, rng, "euler")


def exact_recursion(spec: CarmaSpec, noise: StableParams, cfg: SimConfig, rng: RngStream) -> SampledSeries:
    """Sampled recursion X_(k+1) = e^(A delta) X_k + sum_i e^(A(delta - s_i)) e_p dL_i over midpoints s_i."""
    _check(spec, noise, cfg)
    m = cfg.substeps
    dL = increments(noise, cfg.step, cfg.total_steps, rng)
    s = (np.arange(1, m + 1) - 0.5) * cfg.step
    V = matrix_exp(spec.A, cfg.delta - s)[..., :, -1]  # (m, p)
    Z = dL.reshape(-1, m) @ V
    phi = spec.phi()
    X = np.zeros((Z.shape[0] + 1, spec.p))
    with np.errstate(over="ignore", invalid="ignore"):
        for k, z in enumerate(Z):
            X[k + 1] = phi @ X[k] + z
    y = X[cfg.burn_blocks + 1 :] @ spec.cvec
    return _series(y, spec, noise, cfg, rng, "exact")


SCHEMES = {"euler": euler_maruyama, "exact": exact_recursion}


def simulate(spec: CarmaSpec, noise: StableParams, cfg: SimConfig, rng: RngStream, scheme="euler") -> SampledSeries:
    """Dispatches to the Euler (default) or the exact-transition scheme."""
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme '{scheme}', choose from {list(SCHEMES)}")
    return SCHEMES[scheme](spec, noise, cfg, rng)
