"""Accuracy and consistency metrics over scenario logs."""
from __future__ import annotations

import numpy as np
from scipy.stats import chi2

from .core import wrap_state
from .simulator import ANGLE_MASKS, ScenarioLog

WARMUP_FRACTION = 0.1
CONFIDENCE = 0.95

POSITION_COMPONENT = {"quad1d": "z", "quad2d": "y"}
VELOCITY_COMPONENT = {"quad1d": "zdot", "quad2d": "ydot"}


def chi2_interval(dof: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Two-sided chi-square acceptance interval."""
    a = (1.0 - confidence) / 2.0
    return float(chi2.ppf(a, dof)), float(chi2.ppf(1.0 - a, dof))


def warmup_rows(n_rows: int) -> int:
    return int(np.ceil(WARMUP_FRACTION * n_rows))


def range_baseline(log: ScenarioLog) -> np.ndarray:
    """Position implied by inverting each raw range reading, NaN where absent.

    On quad2d the roll angle is taken from the previous tick's commanded
    angle, which the filter also knows.
    """
    r = log.measurements["range"][:, 0]
    if log.model == "quad1d":
        return r.copy()
    out = np.full_like(r, np.nan)
    out[1:] = log.wall_y - r[1:] * np.cos(log.controls[:-1, 0])
    return out


def _rmse(err) -> float:
    err = np.asarray(err)
    return float(np.sqrt(np.mean(np.square(err)))) if err.size else float("nan")


def compute_metrics(log: ScenarioLog) -> dict:
    """RMSE per component, NEES summary and NIS envelope fractions.

    RMSE uses every row; NEES statistics skip the first 10% of rows.
    """
    if len(log) == 0:
        raise ValueError("cannot compute metrics of an empty log")
    mask = ANGLE_MASKS[log.model]
    err = wrap_state(log.est - log.truth, mask)
    n = err.shape[1]
    start = warmup_rows(len(log))
    nees = log.nees[start:]
    lo, hi = chi2_interval(n)

    out = {
        "model": log.model,
        "filter": log.filter_type,
        "seed": int(log.seed),
        "n_rows": int(len(log)),
        "failed": bool(log.failed),
        "error": log.error,
        "events": len(log.events),
        "rmse": {s: _rmse(err[:, i]) for i, s in enumerate(log.state_names)},
        "mean_nees": float(np.mean(nees)) if nees.size else float("nan"),
        "nees_envelope": [lo, hi],
        "nees_envelope_fraction": float(np.mean((nees >= lo) & (nees <= hi))) if nees.size else float("nan"),
        "nis_fraction": {},
        "update_counts": {},
    }
    for s in log.sensor_names:
        v = log.nis[s][start:]
        v = v[np.isfinite(v)]
        dof = log.measurements[s].shape[1]
        a, b = chi2_interval(dof)
        out["nis_fraction"][s] = float(np.mean((v >= a) & (v <= b))) if v.size else float("nan")
        out["update_counts"][s] = int(np.count_nonzero(np.isfinite(log.nis[s])))

    if log.model in POSITION_COMPONENT:
        pos = POSITION_COMPONENT[log.model]
        i = log.state_names.index(pos)
        base = range_baseline(log)
        rows = np.isfinite(base)
        out["position_rmse"] = _rmse(err[rows, i])
        out["baseline_position_rmse"] = _rmse(base[rows] - log.truth[rows, i])
        out["velocity_rmse"] = out["rmse"][VELOCITY_COMPONENT[log.model]]
    return out


def aggregate_metrics(runs: list[dict], logs: list[ScenarioLog] | None = None) -> dict:
    """Combine per-seed metrics.

    ``nees_envelope_fraction`` pools every post-warm-up step of every run
    against the single-run interval.  When logs are given, the averaged NEES
    across runs is also checked against its own Monte-Carlo interval.
    """
    if not runs:
        raise ValueError("no runs to aggregate")
    names = list(runs[0]["rmse"])
    rm = np.array([[r["rmse"][s] for s in names] for r in runs])
    rows = np.array([max(r["n_rows"] - warmup_rows(r["n_rows"]), 0) for r in runs], dtype=float)
    fr = np.array([r["nees_envelope_fraction"] for r in runs])
    mn = np.array([r["mean_nees"] for r in runs])
    out = {
        "model": runs[0]["model"],
        "filter": runs[0]["filter"],
        "n_seeds": len(runs),
        "seeds": [r["seed"] for r in runs],
        "failed_runs": int(sum(r["failed"] for r in runs)),
        "rmse_mean": dict(zip(names, map(float, rm.mean(axis=0)))),
        "rmse_std": dict(zip(names, map(float, rm.std(axis=0)))),
        "mean_nees": float(np.sum(mn * rows) / np.sum(rows)),
        "nees_envelope": runs[0]["nees_envelope"],
        "nees_envelope_fraction": float(np.sum(fr * rows) / np.sum(rows)),
    }
    for key in ("position_rmse", "baseline_position_rmse", "velocity_rmse"):
        if key in runs[0]:
            v = np.array([r[key] for r in runs])
            out[f"{key}_mean"] = float(v.mean())
            out[f"{key}_std"] = float(v.std())
    if logs:
        L = min(len(g) for g in logs)
        n = logs[0].truth.shape[1]
        avg = np.mean([g.nees[:L] for g in logs], axis=0)[warmup_rows(L):]
        m = len(logs)
        lo, hi = chi2_interval(m * n)
        out["averaged_nees_envelope"] = [lo / m, hi / m]
        out["averaged_nees_envelope_fraction"] = float(np.mean((avg >= lo / m) & (avg <= hi / m)))
    return out
