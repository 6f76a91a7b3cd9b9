"""Estimator accuracy metrics over Monte Carlo replications."""

import numpy as np
import pandas as pd

COLUMNS = ["estimator", "n", "coordinate", "theta0", "mean", "bias", "std", "successes", "failures", "note"]


def failure_counts(records):
    """Failure counts per (estimator, n, failure_stage)."""
    df = pd.DataFrame([r for r in records if r["failed"]], columns=["estimator", "n", "failure_stage", "replication"])
    if df.empty:
        return pd.DataFrame(columns=["estimator", "n", "failure_stage", "count"])
    return df.groupby(["estimator", "n", "failure_stage"]).size().reset_index(name="count")


def summarize(records, theta0, names=None):
    """
    Mean, bias |mean - theta0| and sample std (divisor R-1) of the successful estimates per estimator, n and coordinate.

    Failed replications are counted, never imputed. A single success reports std 0 with note 'single success'; a group
    without successes keeps one row per coordinate with empty statistics and note 'no successful replications'.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    names = list(names or (f"theta{i + 1}" for i in range(theta0.size)))
    rows = []
    groups = sorted({(r["estimator"], r["n"]) for r in records})
    for est, n in groups:
        group = [r for r in records if r["estimator"] == est and r["n"] == n]
        ok = np.array([r["theta_hat"] for r in group if not r["failed"]], dtype=float).reshape(-1, theta0.size)
        failures = len(group) - len(ok)
        for k, name in enumerate(names):
            row = dict(estimator=est, n=n, coordinate=name, theta0=theta0[k], successes=len(ok), failures=failures)
            if len(ok) == 0:
                empty = {"mean": np.nan, "bias": np.nan, "std": np.nan, "note": "no successful replications"}
                rows.append({**row, **empty})
                continue
            mean = ok[:, k].mean()
            std = ok[:, k].std(ddof=1) if len(ok) > 1 else 0.0
            note = "single success" if len(ok) == 1 else ""
            rows.append({**row, "mean": mean, "bias": abs(mean - theta0[k]), "std": std, "note": note})
    return pd.DataFrame(rows, columns=COLUMNS)
