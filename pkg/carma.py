"""
Command-line interface of stablecarma.

Usage:
    $ python carma.py simulate --family OU --theta -1 --alpha 1.5 --n 2000 --seed 1 --out y.csv
    $ python carma.py periodogram --input y.csv
    $ python carma.py whittle-fit --input y.csv --family OU --alpha 1.5
    $ python carma.py garcia-fit --input y.csv --family carma21.yaml
    $ python carma.py spectrum --family CARMA21_EX48 --sigma-wa
    $ python carma.py beta-grid --family CARMA20_EX47 --alpha 1.5 --num 81
    $ python carma.py limit-sim --family OU --theta-grid -2 -1 -0.5 --alpha 1.5 --reps 10000
    $ python carma.py acvf-limit --family OU --alpha 1.5 --lags 0 1 2
    $ python carma.py experiment --config data/experiments/ou_stable.yaml --replications 100

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd

FILE = Path(__file__).resolve()
ROOT = FILE.parents[0]  # stablecarma root directory
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))  # add ROOT to PATH

import experiment
from models.carma import load_family
from models.garcia import garcia_estimate
from models.kalman import sigma_WA, solve_riccati, spectral_density_sampled
from models.limit import acvf_limit_params, beta_grid, simulate_limit_W
from models.stable import RngStream, StableParams
from models.whittle import OBJECTIVES, MinimizeOptions, whittle_estimate
from utils import CarmaError, ConfigError
from utils.general import (
    LOGGER,
    NUM_THREADS,
    colorstr,
    csv_load,
    csv_save,
    increment_path,
    json_save,
    print_args,
    yaml_load,
)
from utils.pathsim import SCHEMES, SimConfig, simulate
from utils.spectral import acvf, periodogram

DEFAULTS = {
    "family": "OU",
    "delta": 1.0,
    "alpha": 1.5,
    "sigma": 1.0,
    "n": 2000,
    "step": 0.01,
    "burn_in": 0.0,
    "scheme": "euler",
    "points": 128,
    "num": 41,
    "reps": 10000,
    "lags": [0],
    "objective": None,
    "seed": 0,
    "threads": NUM_THREADS,
}
OUTPUTS = {
    "simulate": "series.csv",
    "acvf": "acvf.csv",
    "periodogram": "periodogram.csv",
    "spectrum": "spectrum.csv",
    "whittle-fit": "whittle.json",
    "garcia-fit": "garcia.json",
    "beta-grid": "beta_grid.csv",
    "limit-sim": "limit_draws.csv",
    "acvf-limit": "acvf_limit.json",
}


def get(opt, key):
    """Flag value, else the --config value already merged into `opt`, else the default."""
    v = getattr(opt, key, None)
    return DEFAULTS.get(key) if v is None else v


def output_path(opt):
    """--out if given, else runs/<command>/exp*/<file>."""
    if opt.out:
        path = Path(opt.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
    return increment_path(ROOT / "runs" / opt.command / "exp", mkdir=True) / OUTPUTS[opt.command]


def model(opt):
    """Family and theta (default theta0 of the family) from the flags."""
    family = load_family(get(opt, "family"))
    theta = getattr(opt, "theta", None) or getattr(opt, "theta0", None) or family.theta0
    if theta is None:
        raise ConfigError(f"family {family.family} needs --theta")
    return family, family.check(theta)


def cmd_simulate(opt):
    """Simulates one sampled path; returns the (k, y) frame and its provenance."""
    family, theta = model(opt)
    spec = family.spec(theta, get(opt, "delta"))
    cfg = SimConfig(get(opt, "n"), get(opt, "step"), get(opt, "delta"), get(opt, "burn_in"))
    rng = RngStream(get(opt, "seed"), getattr(opt, "stream", None) or 0)
    y = simulate(spec, StableParams(get(opt, "alpha"), get(opt, "sigma")), cfg, rng, get(opt, "scheme"))
    return y.to_frame(), {"family": family.family, "theta": theta.tolist(), **y.provenance}


def cmd_acvf(opt):
    """Sample autocovariances of the --input series up to --max-lag."""
    y = csv_load(opt.input)
    maxlag = opt.max_lag if opt.max_lag is not None else min(len(y) - 1, 50)
    g = acvf(y, maxlag)
    return pd.DataFrame({"h": np.arange(g.size), "gamma": g}), {"input": opt.input, "n": len(y)}


def cmd_periodogram(opt):
    """Periodogram of the --input series at all 2n Fourier frequencies."""
    y = csv_load(opt.input)
    I = periodogram(y)
    return pd.DataFrame({"omega": I.freqs, "value": I.values}), {"input": opt.input, "n": len(y)}


def cmd_spectrum(opt):
    """Sampled spectral density in quadrature and transfer form, optionally with Sigma_W(A)."""
    family, theta = model(opt)
    spec = family.spec(theta, get(opt, "delta"))
    omega = np.linspace(-np.pi, np.pi, get(opt, "points"))
    f = spectral_density_sampled(omega, solve_riccati(spec), get(opt, "sigma") ** 2)
    meta = {"family": family.family, "theta": theta.tolist(), "delta": spec.delta, "max_rel_diff": f"{f.rel_diff:.3g}"}
    if opt.sigma_wa:
        S = sigma_WA(theta, family, spec.delta)
        LOGGER.info(f"{colorstr('Sigma_W(A):')}\n{S}")
        meta["sigma_wa"] = S.tolist()
    return pd.DataFrame({"omega": omega, "f_integral": f.integral, "f_pi": f.transfer}), meta


def cmd_whittle_fit(opt):
    """Whittle estimate of the --input series."""
    family = load_family(get(opt, "family"))
    y = csv_load(opt.input)
    options = MinimizeOptions(threads=get(opt, "threads"))
    alpha = getattr(opt, "alpha", None)
    kind = get(opt, "objective")
    result = whittle_estimate(y, family, alpha=alpha, delta=get(opt, "delta"), kind=kind, options=options)
    return None, {"family": family.family, "names": list(family.names), **result.to_dict()}


def cmd_garcia_fit(opt):
    """Indirect ARMA-based estimate of the --input series."""
    family = load_family(get(opt, "family"))
    result = garcia_estimate(csv_load(opt.input), family, delta=get(opt, "delta"))
    return None, {"family": family.family, "names": list(family.names), **result.to_dict()}


def cmd_beta_grid(opt):
    """Beta diagnostics along one-dimensional sweeps through theta0."""
    family, theta0 = model(opt)
    df = beta_grid(family, theta0, get(opt, "alpha"), num=get(opt, "num"), sigma=get(opt, "sigma"),
                   delta=get(opt, "delta"), threads=get(opt, "threads"))
    return df, {"family": family.family, "theta0": theta0.tolist(), "alpha": get(opt, "alpha")}


def cmd_limit_sim(opt):
    """Joint draws of the limit Whittle function over --theta-grid."""
    family, theta0 = model(opt)
    grid = opt.theta_grid or [theta0.tolist()]
    grid = np.asarray(grid, dtype=float).reshape(-1, family.dim)
    W = simulate_limit_W(family, grid, theta0, get(opt, "alpha"), get(opt, "sigma"), get(opt, "reps"),
                         RngStream(get(opt, "seed"), 0), get(opt, "delta"))
    cols = ["W(" + ",".join(f"{x:.6g}" for x in th) + ")" for th in grid]
    meta = {"family": family.family, "theta0": theta0.tolist(), "alpha": get(opt, "alpha"), "reps": len(W)}
    return pd.DataFrame(W, columns=cols), meta


def cmd_acvf_limit(opt):
    """Stable limit laws of the scaled sample autocovariances at --lags."""
    family, theta0 = model(opt)
    alpha = get(opt, "alpha")
    limits = acvf_limit_params(family, theta0, alpha, get(opt, "sigma"), list(get(opt, "lags")), get(opt, "delta"))
    out = [{"lag": x.lag, "alpha": alpha / 2, "scale": x.scale, "skew": x.skew} for x in limits]
    return None, {"family": family.family, "theta0": theta0.tolist(), "limits": out}


def cmd_experiment(opt):
    """Delegates to experiment.run, which writes its own report directory."""
    keys = ("family", "theta0", "alpha", "sigma", "n_list", "replications", "estimators", "seed", "threads",
            "step", "delta", "burn_in", "scheme", "out")
    experiment.run(config=opt.config, **{k: getattr(opt, k, None) for k in keys})
    return None, None


COMMANDS = {
    "simulate": cmd_simulate,
    "acvf": cmd_acvf,
    "periodogram": cmd_periodogram,
    "spectrum": cmd_spectrum,
    "whittle-fit": cmd_whittle_fit,
    "garcia-fit": cmd_garcia_fit,
    "beta-grid": cmd_beta_grid,
    "limit-sim": cmd_limit_sim,
    "acvf-limit": cmd_acvf_limit,
    "experiment": cmd_experiment,
}


def run(opt):
    """Runs one subcommand and writes its CSV or JSON output."""
    if opt.config and opt.command != "experiment":
        for k, v in yaml_load(opt.config).items():
            k = k.replace("-", "_")
            if getattr(opt, k, None) is None:
                setattr(opt, k, v)
    df, meta = COMMANDS[opt.command](opt)
    if df is None and meta is None:
        return
    path = output_path(opt)
    if df is not None:
        csv_save(path, df, meta)
    else:
        json_save(path, meta)
    LOGGER.info(f"Results saved to {colorstr('bold', path)}")
    return path


def parse_opt(argv=None):
    """Parses the subcommand and its flags; global flags --seed --out --threads --config are shared."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="global seed")
    common.add_argument("--out", type=str, default=None, help="output file (directory for experiment)")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--config", type=str, default=None, help="yaml/json file whose keys fill unset flags")

    modelargs = argparse.ArgumentParser(add_help=False)
    modelargs.add_argument("--family", type=str, default=None, help="OU, CARMA20_EX47, CARMA21_EX48 or a yaml")
    modelargs.add_argument("--delta", type=float, default=None, help="sampling distance")

    parser = argparse.ArgumentParser(description="alpha-stable CARMA simulation, estimation and limit diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common, modelargs], help="simulate a sampled CARMA path")
    p.add_argument("--theta", nargs="+", type=float, default=None, help="parameter vector, default theta0")
    p.add_argument("--alpha", type=float, default=None, help="stability index")
    p.add_argument("--sigma", type=float, default=None, help="noise scale")
    p.add_argument("--n", type=int, default=None, help="number of observations")
    p.add_argument("--step", type=float, default=None, help="simulation step")
    p.add_argument("--burn-in", type=float, default=None, help="discarded time before the first sample")
    p.add_argument("--scheme", choices=list(SCHEMES), default=None, help="simulation scheme")
    p.add_argument("--stream", type=int, default=None, help="stream id (replication index)")

    for name, text in (("acvf", "sample autocovariances of a series"), ("periodogram", "periodogram of a series")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--input", type=str, required=True, help="series CSV, last column used")
        if name == "acvf":
            p.add_argument("--max-lag", type=int, default=None, help="largest lag, default min(n-1, 50)")

    p = sub.add_parser("spectrum", parents=[common, modelargs], help="sampled spectral density in both forms")
    p.add_argument("--theta", nargs="+", type=float, default=None, help="parameter vector, default theta0")
    p.add_argument("--sigma", type=float, default=None, help="noise scale, driver variance sigma^2")
    p.add_argument("--points", type=int, default=None, help="number of frequencies on [-pi, pi]")
    p.add_argument("--sigma-wa", action="store_true", help="also compute the asymptotic covariance matrix")

    for name, text in (("whittle-fit", "adjusted Whittle estimate"), ("garcia-fit", "indirect ARMA-based estimate")):
        p = sub.add_parser(name, parents=[common, modelargs], help=text)
        p.add_argument("--input", type=str, required=True, help="series CSV, last column used")
        if name == "whittle-fit":
            p.add_argument("--alpha", type=float, default=None, help="stability index for the scaled objective")
            p.add_argument("--objective", choices=OBJECTIVES, default=None, help="objective, default by --alpha")

    p = sub.add_parser("beta-grid", parents=[common, modelargs], help="beta, beta+ and beta- along sweeps")
    p.add_argument("--theta0", nargs="+", type=float, default=None, help="true parameter")
    p.add_argument("--alpha", type=float, default=None, help="stability index")
    p.add_argument("--sigma", type=float, default=None, help="noise scale")
    p.add_argument("--num", type=int, default=None, help="grid points per coordinate")

    p = sub.add_parser("limit-sim", parents=[common, modelargs], help="draws of the limit Whittle function")
    p.add_argument("--theta0", nargs="+", type=float, default=None, help="true parameter")
    p.add_argument("--theta-grid", nargs="+", type=float, default=None, help="flattened parameter vectors")
    p.add_argument("--alpha", type=float, default=None, help="stability index")
    p.add_argument("--sigma", type=float, default=None, help="noise scale")
    p.add_argument("--reps", type=int, default=None, help="number of draws")

    p = sub.add_parser("acvf-limit", parents=[common, modelargs], help="stable limit of the scaled sample ACVF")
    p.add_argument("--theta0", nargs="+", type=float, default=None, help="true parameter")
    p.add_argument("--alpha", type=float, default=None, help="stability index")
    p.add_argument("--sigma", type=float, default=None, help="noise scale")
    p.add_argument("--lags", nargs="+", type=int, default=None, help="lags")

    p = sub.add_parser("experiment", parents=[common], help="Monte Carlo study")
    p.add_argument("--family", type=str, default=None, help="family id or yaml")
    p.add_argument("--theta0", nargs="+", type=float, default=None, help="true parameter")
    p.add_argument("--alpha", type=float, default=None, help="stability index")
    p.add_argument("--sigma", type=float, default=None, help="noise scale")
    p.add_argument("--n-list", nargs="+", type=int, default=None, help="sample sizes")
    p.add_argument("--replications", type=int, default=None, help="number of replications")
    p.add_argument("--estimators", nargs="+", choices=experiment.ESTIMATORS, default=None, help="estimators")
    p.add_argument("--step", type=float, default=None, help="simulation step")
    p.add_argument("--delta", type=float, default=None, help="sampling distance")
    p.add_argument("--burn-in", type=float, default=None, help="discarded time before the first sample")
    p.add_argument("--scheme", choices=list(SCHEMES), default=None, help="simulation scheme")

    opt = parser.parse_args(argv)
    print_args(vars(opt))
    return opt


def main(opt):
    """Runs the subcommand; CarmaError subclasses map to their exit codes."""
    try:
        run(opt)
    except CarmaError as e:
        LOGGER.error(f"{colorstr('red', 'bold', type(e).__name__)}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    opt = parse_opt()
    sys.exit(main(opt))
