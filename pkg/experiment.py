"""
Monte Carlo study of the Whittle and indirect ARMA estimators on simulated stable CARMA paths.

Usage:
    $ python experiment.py --config data/experiments/ou_stable.yaml
    $ python experiment.py --family OU --theta0 -1 --alpha 1.5 --n-list 500 2000 --replications 100
"""

import argparse
import dataclasses
import sys
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

FILE = Path(__file__).resolve()
ROOT = FILE.parents[0]  # stablecarma root directory
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))  # add ROOT to PATH

from models.carma import load_family
from models.garcia import garcia_estimate
from models.stable import RngStream, StableParams
from models.whittle import MinimizeOptions, whittle_estimate
from utils import CarmaError, ConfigError
from utils.general import (
    LOGGER,
    NUM_THREADS,
    TQDM_BAR_FORMAT,
    Profile,
    colorstr,
    csv_save,
    increment_path,
    json_save,
    print_args,
    yaml_load,
    yaml_save,
)
from utils.metrics import failure_counts, summarize
from utils.pathsim import SCHEMES, SimConfig, simulate

PREFIX = colorstr("experiment: ")
ESTIMATORS = ("whittle", "garcia")


@dataclass
class ExperimentConfig:
    family: str = "OU"  # family id or family yaml
    theta0: list = None  # default: theta0 of the family config
    alpha: float = 1.5
    sigma: float = 1.0
    n_list: list = field(default_factory=lambda: [500, 2000, 5000])
    replications: int = 500
    estimators: list = field(default_factory=lambda: list(ESTIMATORS))
    seed: int = 0
    threads: int = NUM_THREADS  # parallelism hint, not part of the results
    out: str = None
    step: float = 0.01
    delta: float = 1.0
    burn_in: float = 0.0
    scheme: str = "euler"

    @classmethod
    def from_dict(cls, d):
        """Builds a config from a mapping, rejecting unknown keys."""
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment config keys {sorted(unknown)}, valid keys {sorted(known)}")
        return cls(**d)

    def check(self):
        """Validates the config and returns the resolved parameter family."""
        family = load_family(self.family)
        if self.theta0 is None:
            if family.theta0 is None:
                raise ConfigError(f"family {family.family} has no default theta0, set theta0")
            self.theta0 = list(family.theta0)
        self.theta0 = [float(x) for x in np.atleast_1d(self.theta0)]
        if not family.contains(family.check(self.theta0), interior=True):
            raise ConfigError(f"theta0={self.theta0} must lie in the interior of {family.bounds.tolist()}")
        if self.replications < 1:
            raise ConfigError(f"replications={self.replications} must be >= 1")
        if not self.n_list or min(self.n_list) < 1:
            raise ConfigError(f"n_list={self.n_list} must be a nonempty list of positive sizes")
        self.n_list = sorted(int(n) for n in self.n_list)
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ConfigError(f"estimators must be a nonempty subset of {list(ESTIMATORS)}, got {self.estimators}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme '{self.scheme}', choose from {list(SCHEMES)}")
        StableParams(self.alpha, self.sigma)
        SimConfig(max(self.n_list), self.step, self.delta, self.burn_in)
        return family

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("threads")
        d.pop("out")
        return d


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list
    summary: pd.DataFrame
    failures: pd.DataFrame
    wall_clock: float = 0.0

    def save(self, save_dir):
        """Writes config.yaml, records.json and summary.csv (plus failures.csv); wall-clock is left out."""
        save_dir = Path(save_dir)
        save_dir.mkdir(parents=True, exist_ok=True)
        meta = {
            "bias": "|mean - theta0|",
            "std": "sample standard deviation over successful replications, divisor successes - 1",
            "failures": "counted per estimator and n, excluded from mean/bias/std",
        }
        yaml_save(save_dir / "config.yaml", self.config.to_dict())
        records = {"config": self.config.to_dict(), "conventions": meta, "records": self.records}
        json_save(save_dir / "records.json", records)
        csv_save(save_dir / "summary.csv", self.summary, {"family": self.config.family, "alpha": self.config.alpha,
                                                          "seed": self.config.seed, **meta})
        if len(self.failures):
            csv_save(save_dir / "failures.csv", self.failures)
        return save_dir


def _record(r, n, est, result=None, stage=None, message=""):
    """One replication record; non-finite estimates become failures."""
    theta = None if result is None else np.asarray(result.theta_hat, dtype=float)
    if stage is None and result is not None and result.failure is not None:
        stage = result.failure_stage if est == "garcia" else "whittle"
        message = getattr(result, "message", "") or result.failure
    if stage is None and not np.all(np.isfinite(theta)):
        stage, message = "nonfinite", "non-finite estimate"
    rec = {"replication": r, "n": n, "estimator": est, "failed": stage is not None, "failure_stage": stage}
    rec["theta_hat"] = None if stage is not None else theta.tolist()
    if message:
        rec["message"] = message
    if est == "whittle" and result is not None and stage is None:
        rec["converged"] = bool(result.converged)
    return rec


def replicate(r, cfg: ExperimentConfig, family, options=None):
    """Simulates replication `r` once at the largest n and runs every estimator on the nested prefixes."""
    spec = family.spec(cfg.theta0, cfg.delta)
    noise = StableParams(cfg.alpha, cfg.sigma)
    sim = SimConfig(max(cfg.n_list), cfg.step, cfg.delta, cfg.burn_in)
    records = []
    try:
        path = simulate(spec, noise, sim, RngStream(cfg.seed, r), cfg.scheme)
    except CarmaError as e:
        return [_record(r, n, est, stage="simulate", message=str(e)) for n in cfg.n_list for est in cfg.estimators]
    for n in cfg.n_list:
        y = path.head(n)
        for est in cfg.estimators:
            try:
                if est == "whittle":
                    result = whittle_estimate(y, family, alpha=cfg.alpha, delta=cfg.delta, options=options)
                else:
                    result = garcia_estimate(y, family, delta=cfg.delta)
                records.append(_record(r, n, est, result))
            except CarmaError as e:
                records.append(_record(r, n, est, stage=getattr(e, "stage", est), message=str(e)))
    return records


def run_experiment(cfg: ExperimentConfig, options: MinimizeOptions = None) -> ExperimentReport:
    """Runs all replications in parallel; the report does not depend on completion order or thread count."""
    family = cfg.check()
    dt = Profile()
    with dt, ThreadPool(max(1, min(cfg.threads, cfg.replications))) as pool:
        results = pool.imap_unordered(lambda r: replicate(r, cfg, family, options), range(cfg.replications))
        records = [rec for recs in tqdm(results, total=cfg.replications, desc=f"{PREFIX}replications",
                                        bar_format=TQDM_BAR_FORMAT) for rec in recs]
    records.sort(key=lambda x: (x["estimator"], x["n"], x["replication"]))
    summary = summarize(records, cfg.theta0, family.names)
    report = ExperimentReport(cfg, records, summary, failure_counts(records), dt.t)
    LOGGER.info(f"{PREFIX}{cfg.replications} replications in {dt.t:.1f}s\n{summary.to_string(index=False)}")
    for est, n, frac in _failure_fractions(records):
        if frac > 0:
            LOGGER.info(f"{PREFIX}{est} n={n}: {frac:.1%} of replications failed")
    return report


def _failure_fractions(records):
    """Yields (estimator, n, failed fraction) per group."""
    groups = sorted({(r["estimator"], r["n"]) for r in records})
    for est, n in groups:
        group = [r["failed"] for r in records if r["estimator"] == est and r["n"] == n]
        yield est, n, sum(group) / len(group)


def run(config=None, project=ROOT / "runs/experiment", name="exp", exist_ok=False, **kwargs):
    """Loads `config` (yaml or json), applies keyword overrides, runs the study and saves the report."""
    d = yaml_load(config) if config else {}
    d.update({k: v for k, v in kwargs.items() if v is not None})
    cfg = ExperimentConfig.from_dict(d)
    report = run_experiment(cfg)
    save_dir = Path(cfg.out) if cfg.out else increment_path(Path(project) / name, exist_ok=exist_ok)
    report.save(save_dir)
    LOGGER.info(f"Results saved to {colorstr('bold', save_dir)}")
    return report


def parse_opt():
    """Parses command-line arguments for a Monte Carlo study; flags override keys of --config."""
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", type=str, default=None, help="experiment yaml/json config")
    parser.add_argument("--family", type=str, default=None, help="family id or family yaml")
    parser.add_argument("--theta0", nargs="+", type=float, default=None, help="true parameter")
    parser.add_argument("--alpha", type=float, default=None, help="stability index of the driving noise")
    parser.add_argument("--sigma", type=float, default=None, help="scale of the driving noise")
    parser.add_argument("--n-list", nargs="+", type=int, default=None, help="sample sizes")
    parser.add_argument("--replications", type=int, default=None, help="number of replications")
    parser.add_argument("--estimators", nargs="+", choices=ESTIMATORS, default=None, help="estimators to run")
    parser.add_argument("--seed", type=int, default=None, help="global seed")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--step", type=float, default=None, help="simulation step")
    parser.add_argument("--delta", type=float, default=None, help="sampling distance")
    parser.add_argument("--burn-in", type=float, default=None, help="discarded time before the first sample")
    parser.add_argument("--scheme", choices=list(SCHEMES), default=None, help="simulation scheme")
    parser.add_argument("--out", type=str, default=None, help="output directory, default runs/experiment/exp*")
    parser.add_argument("--project", default=ROOT / "runs/experiment", help="save results to project/name")
    parser.add_argument("--name", default="exp", help="save results to project/name")
    parser.add_argument("--exist-ok", action="store_true", help="existing project/name ok, do not increment")
    opt = parser.parse_args()
    print_args(vars(opt))
    return opt


def main(opt):
    """Runs the study, mapping config errors to exit code 2 and numerical errors to 3."""
    try:
        run(**vars(opt))
    except CarmaError as e:
        LOGGER.error(f"{PREFIX}{type(e).__name__}: {e}")
        sys.exit(e.exit_code)


if __name__ == "__main__":
    opt = parse_opt()
    main(opt)
