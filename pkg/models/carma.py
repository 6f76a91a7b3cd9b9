"""
CARMA(p, q) model specifications, parameter families and admissibility checks.

Usage:
    $ python models/carma.py --cfg carma21.yaml --theta 1.9647 0.0893 0.1761
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm

FILE = Path(__file__).resolve()
ROOT = FILE.parents[1]  # stablecarma root directory
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))  # add ROOT to PATH

from utils import ConfigError
from utils.general import LOGGER, colorstr, print_args, yaml_load

FAMILY_FILES = {"OU": "ou.yaml", "CARMA20_EX47": "carma20.yaml", "CARMA21_EX48": "carma21.yaml"}
CANCEL_TOL = 1e-10  # minimum distance between AR eigenvalues and MA roots


def companion(a):
    """Companion matrix with ones on the superdiagonal and last row (-a_p, ..., -a_1)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    p = a.size
    if p < 1:
        raise ConfigError("companion matrix needs at least one AR coefficient")
    if a[-1] == 0:
        raise ConfigError(f"last AR coefficient a_p must be nonzero, got a={a.tolist()}")
    A = np.eye(p, k=1)
    A[-1] = -a[::-1]
    return A


def matrix_exp(A, t=1.0):
    """e^(A t) by scaling-and-squaring Pade; `t` may be an array, giving a stack of exponentials."""
    A = np.asarray(A, dtype=float)
    t = np.asarray(t, dtype=float)
    return expm(t[..., None, None] * A)


@dataclass(frozen=True)
class CarmaSpec:
    """AR coefficients `a`, length-p MA vector `c` (entry j multiplies z^j) and sampling step `delta`."""

    a: tuple
    c: tuple
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in np.atleast_1d(self.a)))
        object.__setattr__(self, "c", tuple(float(x) for x in np.atleast_1d(self.c)))
        if len(self.c) != len(self.a):
            raise ConfigError(f"MA vector must have length p={len(self.a)}, got {len(self.c)}")
        if self.a[-1] == 0:
            raise ConfigError("last AR coefficient a_p must be nonzero")
        if not any(self.c):
            raise ConfigError("MA vector must have at least one nonzero entry")
        if not self.delta > 0:
            raise ConfigError(f"sampling step delta={self.delta} must be positive")

    @property
    def p(self):
        return len(self.a)

    @property
    def A(self):
        return companion(self.a)

    @property
    def cvec(self):
        return np.array(self.c)

    @property
    def ep(self):
        e = np.zeros(self.p)
        e[-1] = 1.0
        return e

    def ar_poly(self):
        """Coefficients (1, a_1, ..., a_p) of a(z), highest power first."""
        return np.concatenate(([1.0], self.a))

    def ma_poly(self):
        """Coefficients of the MA polynomial b(z) = sum_j c_j z^j, highest power first, leading zeros trimmed."""
        return np.trim_zeros(self.cvec[::-1], "f")

    def phi(self):
        """Sampled transition matrix e^(A delta)."""
        return matrix_exp(self.A, self.delta)


def kernel(spec: CarmaSpec, t):
    """Kernel g(t) = c' e^(At) e_p for t >= 0 and 0 for t < 0; vectorised over `t`."""
    t = np.asarray(t, dtype=float)
    E = matrix_exp(spec.A, np.maximum(t, 0.0))
    g = E[..., :, -1] @ spec.cvec
    g = np.where(t >= 0, g, 0.0)
    return float(g) if g.ndim == 0 else g


def carma21_kernel_closed_form(theta, t):
    """Two-exponential kernel of a(z) = z^2 + th1 z + th2, b(z) = z + th3, valid for distinct real roots."""
    th1, th2, th3 = (float(x) for x in theta)
    disc = th1 * th1 - 4 * th2
    if disc <= 0:
        raise ConfigError(f"closed-form kernel needs distinct real roots, discriminant={disc:.3g}")
    sd = np.sqrt(disc)
    # decay rates lp > lm; with c = (th3, 1) these weights give 0.0692 e^(-0.0466t) + 0.9308 e^(-1.9181t) at theta0
    lp, lm = (th1 + sd) / 2, (th1 - sd) / 2
    t = np.asarray(t, dtype=float)
    tt = np.maximum(t, 0.0)
    g = (lp - th3) / sd * np.exp(-lp * tt) + (th3 - lm) / sd * np.exp(-lm * tt)
    g = np.where(t >= 0, g, 0.0)
    return float(g) if g.ndim == 0 else g


def spectral_density_continuous(omega, spec: CarmaSpec, sigma_L2=1.0):
    """Spectral density (sigma_L2 / 2pi) |b(i w)|^2 / |a(i w)|^2 of the continuous-time process."""
    iw = 1j * np.asarray(omega, dtype=float)
    return sigma_L2 / (2 * np.pi) * np.abs(np.polyval(spec.ma_poly(), iw)) ** 2 / np.abs(
        np.polyval(spec.ar_poly(), iw)
    ) ** 2


@dataclass(frozen=True, eq=False)
class ValidationReport:
    eigenvalues: np.ndarray
    stable: bool  # all eigenvalues in the open left half-plane
    no_cancellation: bool  # no AR eigenvalue is an MA root
    sampling_strip: bool  # |Im(eigenvalue)| < pi / delta

    @property
    def passed(self):
        return self.stable and self.no_cancellation and self.sampling_strip

    def __bool__(self):
        return self.passed

    def reason(self):
        """Names of the failed conditions, comma separated."""
        failed = [k for k in ("stable", "no_cancellation", "sampling_strip") if not getattr(self, k)]
        return ", ".join(failed)


def validate(spec: CarmaSpec) -> ValidationReport:
    """Checks stability, absence of pole/zero cancellation and the sampling-strip condition; never raises."""
    eig = np.linalg.eigvals(spec.A)
    ma_roots = np.roots(spec.ma_poly()) if spec.ma_poly().size > 1 else np.empty(0)
    dist = np.abs(eig[:, None] - ma_roots[None, :])
    return ValidationReport(
        eigenvalues=eig,
        stable=bool(np.all(eig.real < 0)),
        no_cancellation=bool(dist.size == 0 or dist.min() > CANCEL_TOL),
        sampling_strip=bool(np.all(np.abs(eig.imag) < np.pi / spec.delta)),
    )


@dataclass(frozen=True, eq=False)
class ParamFamily:
    """Parametric CARMA family: maps theta to a CarmaSpec over the compact box `bounds`."""

    family: str
    p: int
    q: int
    bounds: np.ndarray  # (d, 2) closed intervals
    theta0: tuple = None
    names: tuple = ()
    ar: tuple = ()  # theta indices entering the AR polynomial
    ma: tuple = ()  # theta indices entering the MA polynomial only

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def center(self):
        return self.bounds.mean(1)

    def contains(self, theta, interior=False):
        theta = np.asarray(theta, dtype=float)
        lo, hi = self.bounds.T
        if interior:
            return bool(np.all((lo < theta) & (theta < hi)))
        return bool(np.all((lo <= theta) & (theta <= hi)))

    def check(self, theta):
        """Returns theta as a float array, raising ConfigError on a dimension mismatch."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            raise ConfigError(f"{self.family} expects {self.dim} parameters {list(self.names)}, got {theta.tolist()}")
        return theta

    def coefficients(self, theta):
        """AR coefficients and length-p MA vector at `theta`."""
        th = self.check(theta)
        if self.family == "OU":
            return (-th[0],), (1.0,)
        if self.family == "CARMA20_EX47":  # a(z) = z^2 - (th - 2) z - 2 th, eigenvalues {th, -2}
            return (-(th[0] - 2), -2 * th[0]), (th[0] - 2, 0.0)
        if self.family == "CARMA21_EX48":
            return (th[0], th[1]), (th[2], 1.0)
        c = np.zeros(self.p)  # GENERIC, monic MA part
        c[: self.q] = th[self.p :]
        c[self.q] = 1.0
        return tuple(th[: self.p]), tuple(c)

    def spec(self, theta, delta=1.0) -> CarmaSpec:
        a, c = self.coefficients(theta)
        return CarmaSpec(a, c, delta)


def load_family(cfg="OU", **overrides) -> ParamFamily:
    """Builds a ParamFamily from a family id, a *.yaml path or a dict with keys family/p/q/bounds/theta0/names."""
    if isinstance(cfg, dict):
        d = dict(cfg)
    else:
        key = str(cfg)
        file = FAMILY_FILES.get(key.upper(), key)
        path = Path(file)
        if not path.exists():
            path = FILE.parent / path.name
        if not path.exists():
            raise ConfigError(f"unknown family '{cfg}', choose from {list(FAMILY_FILES)} or GENERIC, or a *.yaml file")
        d = yaml_load(path)
    d.update({k: v for k, v in overrides.items() if v is not None})

    family = str(d.get("family", "")).upper()
    if family not in {*FAMILY_FILES, "GENERIC"}:
        raise ConfigError(f"unknown family id '{family}'")
    p, q = int(d.get("p", 1)), int(d.get("q", 0))
    if not 0 <= q < p:
        raise ConfigError(f"need 0 <= q < p, got p={p}, q={q}")
    if "bounds" not in d:
        raise ConfigError(f"{family} config needs a 'bounds' list of [low, high] pairs")
    bounds = np.asarray(d["bounds"], dtype=float).reshape(-1, 2)
    if np.any(~np.isfinite(bounds)) or np.any(bounds[:, 0] >= bounds[:, 1]):
        raise ConfigError(f"bounds must be finite [low, high] pairs with low < high, got {bounds.tolist()}")
    dim = {"OU": 1, "CARMA20_EX47": 1, "CARMA21_EX48": 3}.get(family, p + q)
    if len(bounds) != dim:
        raise ConfigError(f"{family} needs {dim} bounds, got {len(bounds)}")
    names = tuple(d.get("names") or (f"theta{i + 1}" for i in range(dim)))
    ar = tuple(d.get("ar", range(p if family == "GENERIC" else dim)))
    ma = tuple(d.get("ma", range(p, p + q) if family == "GENERIC" else ()))
    theta0 = d.get("theta0")
    fam = ParamFamily(family, p, q, bounds, tuple(map(float, theta0)) if theta0 is not None else None, names, ar, ma)
    if theta0 is not None and not fam.contains(fam.check(theta0), interior=True):
        raise ConfigError(f"theta0={list(theta0)} must lie in the interior of {bounds.tolist()}")
    return fam


def parse_opt():
    """Parses command-line arguments for inspecting a CARMA family at one parameter value."""
    parser = argparse.ArgumentParser()
    parser.add_argument("--cfg", type=str, default="ou.yaml", help="family id or family yaml")
    parser.add_argument("--theta", nargs="+", type=float, default=None, help="parameter vector, default theta0")
    parser.add_argument("--delta", type=float, default=1.0, help="sampling step")
    opt = parser.parse_args()
    print_args(vars(opt))
    return opt


def main(opt):
    """Logs companion matrix, kernel values and the admissibility report."""
    fam = load_family(opt.cfg)
    spec = fam.spec(opt.theta or fam.theta0, opt.delta)
    report = validate(spec)
    LOGGER.info(f"{colorstr('family:')} {fam.family} p={fam.p} q={fam.q} names={list(fam.names)}")
    LOGGER.info(f"A =\n{spec.A}\nc = {spec.cvec}")
    LOGGER.info(f"g(0, 1, 5) = {kernel(spec, [0.0, 1.0, 5.0])}")
    LOGGER.info(f"eigenvalues {report.eigenvalues}, {'passed' if report else 'failed: ' + report.reason()}")


if __name__ == "__main__":
    opt = parse_opt()
    main(opt)
