"""Built-in verification suites.

Each suite returns a list of ``CheckResult`` rows: finite-difference
Jacobian checks, agreement of a reference Kalman filter, the EKF and the
UKF on the linear 1D model, and Monte-Carlo NEES consistency on 3D.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quad1d, quad2d, quad3d
from .config import parse_config
from .metrics import aggregate_metrics, compute_metrics
from .simulator import ScenarioData, generate_scenario, run_filter
from .ukf import UkfParams

FD_STEP = 1e-6
JACOBIAN_TOL = 1e-5
EQUIVALENCE_TOL = 1e-8
CONSISTENCY_MIN_FRACTION = 0.90

UKF_TUNINGS = {
    "ukf(alpha=1,beta=0,kappa=1)": UkfParams(1.0, 0.0, 1.0),
    "ukf(default)": UkfParams(),
}


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite:<18} {self.name:<34} value={self.value:.3e} tol={self.tol:.1e} {self.detail}"


def numeric_jacobian(f: Callable, x, step: float = FD_STEP) -> np.ndarray:
    """Central differences of ``f`` at ``x``.

    For vector ``x`` the result is (len(f), len(x)); for scalar ``x`` it has
    the shape of ``f(x)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return (np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2 * step)
    J = np.empty((np.size(f(x)), x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        J[:, i] = (np.ravel(f(x + e)) - np.ravel(f(x - e))) / (2 * step)
    return J


def _jacobian_cases(rng: np.random.Generator):
    """(name, draw) pairs; ``draw`` returns (f, x0, analytic Jacobian)."""
    wall = quad2d.Wall2D(quad2d.DEFAULT_WALL_Y)

    def q1_g():
        x, u, dt = rng.normal(0, 5, 2), rng.normal(0, 2, 1), rng.uniform(0.01, 0.1)
        return (lambda s: quad1d.g1d(s, u, dt)), x, quad1d.g1d_prime(dt)

    def q1_h():
        x = rng.normal(0, 5, 2)
        return quad1d.h1d, x, quad1d.h1d_prime(x)

    def q2_g():
        x = np.array([rng.uniform(-1, 1), rng.normal(0, 2), rng.normal(0, 2)])
        u, dt = rng.uniform(-1, 1, 1), rng.uniform(0.01, 0.1)
        return (lambda s: quad2d.g2d(s, u, dt)), x, quad2d.g2d_prime(x, u, dt)

    def q2_h():
        x = np.array([rng.uniform(-1.2, 1.2), rng.normal(0, 2), rng.uniform(-5, 4.5)])
        return (lambda s: quad2d.h2d(s, wall)), x, quad2d.h2d_prime(x, wall)

    def q3_att():
        return quad3d.AttitudeInput(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8))

    def q3_g():
        # heading kept off the +-pi cut so the wrap does not enter the differences
        x = np.concatenate([rng.normal(0, 10, 6), [rng.uniform(-3.0, 3.0)]])
        u = np.concatenate([rng.normal(0, 5, 3), [rng.uniform(-1, 1)]])
        att, dt = q3_att(), rng.uniform(0.01, 0.1)
        return (lambda s: quad3d.g3d(s, att, u, dt)), x, quad3d.g3d_prime(x, att, u, dt)

    def q3_rot():
        att, psi = q3_att(), rng.uniform(-np.pi, np.pi)
        return (lambda p: quad3d.rotation_bg(att, float(p))), np.float64(psi), quad3d.rotation_bg_prime(att, psi)

    def q3_gps():
        x = rng.normal(0, 10, 7)
        return quad3d.h_gps, x, quad3d.h_gps_prime(x)

    def q3_mag():
        x = np.concatenate([rng.normal(0, 10, 6), [rng.uniform(-3.0, 3.0)]])
        return quad3d.h_mag, x, quad3d.h_mag_prime(x)

    return [
        ("quad1d g'", q1_g),
        ("quad1d h'", q1_h),
        ("quad2d g'", q2_g),
        ("quad2d h'", q2_h),
        ("quad3d g'", q3_g),
        ("quad3d R'_bg", q3_rot),
        ("quad3d h_gps'", q3_gps),
        ("quad3d h_mag'", q3_mag),
    ]


def jacobian_suite(n_states: int = 100, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for name, draw in _jacobian_cases(rng):
        worst = 0.0
        for _ in range(n_states):
            f, x, J = draw()
            worst = max(worst, float(np.max(np.abs(numeric_jacobian(f, x) - J))))
        out.append(CheckResult("jacobians", name, worst, JACOBIAN_TOL, worst <= JACOBIAN_TOL, f"{n_states} states"))
    return out


def kalman_reference(cfg, data: ScenarioData) -> tuple[np.ndarray, np.ndarray]:
    """Textbook linear Kalman filter on quad1d, written out independently of
    the library filters.  Returns (means, covariances) per tick."""
    dt = cfg.dt_imu
    A = np.array([[1.0, 0.0], [dt, 1.0]])
    B = np.array([[dt], [0.0]])
    H = np.array([[0.0, 1.0]])
    Q = cfg.Q + B @ B.T * cfg.noise["imu_accel"] ** 2
    R = cfg.R["range"]
    x = data.truth.states[0] + (0.0 if cfg.initial_exact else np.sqrt(cfg.initial_cov_diag) * data.init_draw)
    P = np.diag(cfg.initial_cov_diag)
    K_steps = len(data.samples) - 1
    xs, Ps = [x], [P]
    for k in range(K_steps):
        x = A @ x + B @ data.samples[k]["imu"]
        P = A @ P @ A.T + Q
        z = data.samples[k + 1].get("range")
        if z is not None:
            S = H @ P @ H.T + R
            K = P @ H.T @ np.linalg.inv(S)
            x = x + K @ (z - H @ x)
            P = (np.eye(2) - K @ H) @ P
            P = 0.5 * (P + P.T)
        xs.append(x)
        Ps.append(P)
    return np.array(xs), np.array(Ps)


def linear_equivalence_suite(
    seeds=range(10), duration: float | None = None, reference: bool = True
) -> list[CheckResult]:
    """Max |difference| of means and covariances between the reference KF
    (if ``reference``), the EKF and each UKF tuning on quad1d over every seed."""
    worst: dict[str, list[float]] = {}
    n_seeds = 0
    for seed in seeds:
        n_seeds += 1
        raw = {"model": "quad1d", "seed": int(seed)}
        if duration is not None:
            raw["duration"] = duration
        cfg = parse_config(raw)
        data = generate_scenario(cfg)
        ekf = run_filter(cfg, data)
        pairs = {}
        if reference:
            pairs["kf vs ekf"] = (*kalman_reference(cfg, data), ekf)
        for label, params in UKF_TUNINGS.items():
            ukf = run_filter(dataclasses.replace(cfg, filter_type="ukf", ukf=params), data)
            pairs[f"ekf vs {label}"] = (ekf.est, ekf.cov, ukf)
        for label, (m, c, other) in pairs.items():
            w = worst.setdefault(label, [0.0, 0.0])
            w[0] = max(w[0], float(np.max(np.abs(other.est - m))))
            w[1] = max(w[1], float(np.max(np.abs(other.cov - c))))
    out = []
    for label, (dm, dc) in worst.items():
        for what, v in (("mean", dm), ("cov", dc)):
            out.append(
                CheckResult(
                    "linear-equivalence", f"{label} {what}", v, EQUIVALENCE_TOL, v <= EQUIVALENCE_TOL, f"{n_seeds} seeds"
                )
            )
    return out


def _cfg_and_data(raw, seed):
    cfg = parse_config({**raw, "seed": int(seed)})
    return cfg, generate_scenario(cfg)


def consistency_suite(n_seeds: int = 50) -> list[CheckResult]:
    """Pooled post-warm-up NEES envelope fraction on default quad3d."""
    out = []
    data = [_cfg_and_data({"model": "quad3d"}, s) for s in range(n_seeds)]
    for ftype in ("ekf", "ukf"):
        runs = [compute_metrics(run_filter(dataclasses.replace(c, filter_type=ftype), d)) for c, d in data]
        agg = aggregate_metrics(runs)
        frac = agg["nees_envelope_fraction"]
        ok = frac >= CONSISTENCY_MIN_FRACTION and agg["failed_runs"] == 0
        out.append(
            CheckResult(
                "consistency",
                f"quad3d {ftype} NEES in 95% envelope",
                frac,
                CONSISTENCY_MIN_FRACTION,
                ok,
                f"{n_seeds} seeds, mean NEES {agg['mean_nees']:.2f}",
            )
        )
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "jacobians": jacobian_suite,
    "linear-equivalence": linear_equivalence_suite,
    "consistency": consistency_suite,
}


def run_suites(name: str) -> list[CheckResult]:
    if name == "all":
        return [r for fn in SUITES.values() for r in fn()]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - t0
