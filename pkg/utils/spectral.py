"""Fourier frequencies, uncentered sample autocovariances and the raw periodogram."""

from dataclasses import dataclass

import numpy as np
from scipy import fft, signal

from utils import ConfigError


def series_values(y):
    """Observation vector of a SampledSeries or array-like."""
    try:
        y = np.asarray(getattr(y, "values", y), dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"series is not numeric: {e}") from e
    if y.ndim != 1 or y.size < 1:
        raise ConfigError(f"expected a non-empty 1-D series, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ConfigError(f"series has {int(np.sum(~np.isfinite(y)))} non-finite values")
    return y


def fourier_freqs(n):
    """Frequencies pi j / n for j = -n+1, ..., n."""
    if n < 1:
        raise ConfigError(f"need n >= 1, got n={n}")
    return np.pi * np.arange(-n + 1, n + 1) / n


def sample_acvf(y, h):
    """Uncentered sample autocovariance (1/n) sum_k Y_(k+|h|) Y_k."""
    y = series_values(y)
    n, h = y.size, abs(int(h))
    if h >= n:
        raise ConfigError(f"lag |h|={h} must be smaller than n={n}")
    return float(y[h:] @ y[: n - h]) / n


def acvf(y, maxlag=None):
    """Sample autocovariances at lags 0..maxlag (default n-1)."""
    y = series_values(y)
    n = y.size
    maxlag = n - 1 if maxlag is None else int(maxlag)
    if not 0 <= maxlag < n:
        raise ConfigError(f"maxlag={maxlag} must lie in [0, {n - 1}]")
    r = signal.correlate(y, y, mode="full")[n - 1 :] / n
    return r[: maxlag + 1]


@dataclass(frozen=True, eq=False)
class Periodogram:
    freqs: np.ndarray  # pi j / n, j = -n+1..n
    values: np.ndarray

    @property
    def n(self):
        return self.freqs.size // 2


def periodogram(y) -> Periodogram:
    """I_n(omega_j) = |sum_k Y_k e^(ik omega_j)|^2 / (2 pi n) at all 2n Fourier frequencies by one FFT of length 2n."""
    y = series_values(y)
    n = y.size
    j = np.arange(-n + 1, n + 1)
    F = fft.fft(y, 2 * n)
    return Periodogram(np.pi * j / n, np.abs(F[j % (2 * n)]) ** 2 / (2 * np.pi * n))


def periodogram_direct(y, omega=None):
    """O(n^2) evaluation of the periodogram from its defining sum."""
    y = series_values(y)
    n = y.size
    omega = fourier_freqs(n) if omega is None else np.asarray(omega, dtype=float)
    k = np.arange(1, n + 1)
    return np.abs(np.exp(1j * np.outer(omega, k)) @ y) ** 2 / (2 * np.pi * n)


def periodogram_acvf(y, omega=None):
    """Periodogram from the autocovariances: (2 pi)^-1 sum_(|h|<n) gamma(h) e^(-ih omega)."""
    y = series_values(y)
    n = y.size
    omega = fourier_freqs(n) if omega is None else np.asarray(omega, dtype=float)
    g = acvf(y)
    h = np.arange(1, n)
    return (g[0] + 2 * np.cos(np.outer(omega, h)) @ g[1:]) / (2 * np.pi)
