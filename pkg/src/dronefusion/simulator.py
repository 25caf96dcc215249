"""Ground truth, sensor synthesis and multirate filter execution.

Every IMU tick the filter predicts with the measured control (the IMU is
a control input, not a measurement).  Sensors whose period divides the
tick then update in a fixed order: GPS before magnetometer.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import attitude as att_mod
from . import quad1d, quad2d, quad3d
from .config import ScenarioConfig
from .core import FilterError, GaussianBelief, MeasurementModel, ProcessModel, wrap_angle, wrap_state
from .ekf import ekf_predict, ekf_update
from .ukf import compute_sigmas, ukf_predict, ukf_update_report, unscented_moments

log = logging.getLogger(__name__)

STATE_NAMES = {"quad1d": quad1d.STATE_NAMES, "quad2d": quad2d.STATE_NAMES, "quad3d": quad3d.STATE_NAMES}
SENSOR_NAMES = {"quad1d": ("range",), "quad2d": ("range",), "quad3d": ("gps", "mag")}
ANGLE_MASKS = {"quad1d": None, "quad2d": None, "quad3d": quad3d.ANGLE_MASK}

# stream index per noise source; independent so toggling one leaves the rest unchanged
STREAMS = ("process", "imu", "range", "gps", "mag", "attitude", "init")


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    return {
        name: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        for i, name in enumerate(STREAMS)
    }


# ---------------------------------------------------------------- controls

def _sine(t, p):
    return p.get("amplitude", 1.0) * math.sin(2 * math.pi * t / p.get("period", 5.0))


def _ctrl_1d(name):
    def program(t, x, cfg):
        p = cfg.control_params
        if name == "hover":
            return np.array([0.0]), None
        if name == "constant":
            return np.array([float(p.get("value", 0.0))]), None
        return np.array([_sine(t, p)]), None
    return program


def _ctrl_2d(name):
    def program(t, x, cfg):
        p = cfg.control_params
        if name == "constant":
            return np.array([float(p.get("value", 0.0))]), None
        return np.array([_sine(t, p)]), None
    return program


def _attitude_profile(t, p):
    """Commanded roll/pitch and their rates."""
    tilt = p.get("tilt", 0.0)
    w = 2 * math.pi / p.get("period", 20.0)
    phi, theta = tilt * math.sin(w * t), tilt * math.cos(w * t)
    return quad3d.AttitudeInput(phi, theta), (tilt * w * math.cos(w * t), -tilt * w * math.sin(w * t))


def _ctrl_3d(name):
    def program(t, x, cfg):
        p = cfg.control_params
        att, _ = _attitude_profile(t, p)
        if name == "hover":
            a_des = np.zeros(3)
        else:
            w = 2 * math.pi / p.get("period", 20.0)
            r = p.get("radius", 5.0)
            a_des = -r * w * w * np.array([math.cos(w * t), math.sin(w * t), 0.0])
        gravity = quad3d.GRAVITY_SIGNS[cfg.gravity_sign] * quad3d.G_ACCEL
        a_body = quad3d.rotation_bg(att, x[quad3d.PSI]).T @ (a_des - np.array([0.0, 0.0, gravity]))
        return np.append(a_body, p.get("yaw_rate", 0.0)), att
    return program


CONTROL_PROGRAMS: dict[str, dict[str, Callable]] = {
    "quad1d": {n: _ctrl_1d(n) for n in ("hover", "constant", "sine")},
    "quad2d": {n: _ctrl_2d(n) for n in ("constant", "sine")},
    "quad3d": {n: _ctrl_3d(n) for n in ("hover", "circle")},
}


# ---------------------------------------------------------------- truth

@dataclass
class TruthTrajectory:
    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray  # row k is applied from tick k to k+1
    attitude: Optional[np.ndarray] = None  # (phi, theta) per tick
    euler_rates: Optional[np.ndarray] = None  # (phi_dot, theta_dot) per tick


def _transition(cfg: ScenarioConfig, x, u, dt, att=None):
    if cfg.model == "quad1d":
        return quad1d.g1d(x, u, dt)
    if cfg.model == "quad2d":
        return quad2d.g2d(x, u, dt)
    return quad3d.g3d(x, att, u, dt, cfg.gravity_sign)


def simulate_truth(cfg: ScenarioConfig, streams: Optional[dict] = None) -> TruthTrajectory:
    """Integrate the model's own transition plus Gaussian process disturbance."""
    streams = streams or make_streams(cfg.seed)
    program = CONTROL_PROGRAMS[cfg.model][cfg.control_name]
    K, dt = cfg.n_steps, cfg.dt_imu
    n = cfg.initial_state.shape[0]
    std = np.asarray(cfg.noise["process_std"], dtype=float)
    t = np.arange(K + 1) * dt
    states = np.empty((K + 1, n))
    states[0] = cfg.initial_state
    if cfg.model == "quad3d":
        states[0] = wrap_state(states[0], quad3d.ANGLE_MASK)
    controls, attitude, rates = [], [], []
    for k in range(K + 1):
        u, att = program(t[k], states[k], cfg)
        controls.append(u)
        if att is not None:
            attitude.append((att.phi, att.theta))
            rates.append(_attitude_profile(t[k], cfg.control_params)[1])
        if k == K:
            break
        x = _transition(cfg, states[k], u, dt, att) + std * streams["process"].standard_normal(n)
        if cfg.model == "quad3d":
            x = wrap_state(x, quad3d.ANGLE_MASK)
        states[k + 1] = x
    return TruthTrajectory(
        t,
        states,
        np.array(controls),
        np.array(attitude) if attitude else None,
        np.array(rates) if rates else None,
    )


# ---------------------------------------------------------------- sensors

def sensor_schedule(cfg: ScenarioConfig, tick: int) -> list[str]:
    """Names of the aided sensors that report at ``tick`` (tick 0 reports nothing)."""
    if tick == 0:
        return []
    if cfg.model == "quad3d":
        pairs = (("gps", cfg.dt_gps), ("mag", cfg.dt_mag))
    else:
        pairs = (("range", cfg.dt_range),)
    return [name for name, dt in pairs if tick % cfg.ratio(dt) == 0]


def _body_rates(phi, theta, phi_dot, theta_dot, psi_dot):
    return (
        phi_dot - math.sin(theta) * psi_dot,
        math.cos(phi) * theta_dot + math.sin(phi) * math.cos(theta) * psi_dot,
        -math.sin(phi) * theta_dot + math.cos(phi) * math.cos(theta) * psi_dot,
    )


def sample_sensors(
    truth: TruthTrajectory,
    cfg: ScenarioConfig,
    tick: int,
    streams: dict[str, np.random.Generator],
) -> dict:
    """Measurements available at ``tick``.

    ``"imu"`` (the measured control) is present every tick; on ``quad3d``
    so is ``"attitude_imu"``, the accelerometer angles and body rates
    consumed by the complementary filter.  Aided sensors follow
    ``sensor_schedule``.
    """
    noise = cfg.noise
    x = truth.states[tick]
    u = truth.controls[tick]
    out: dict = {}
    if cfg.model == "quad3d":
        sig = np.array([noise["imu_accel"]] * 3 + [noise["imu_gyro"]])
    elif cfg.model == "quad1d":
        sig = np.array([noise["imu_accel"]])
    else:
        sig = np.array([noise["control"]])
    out["imu"] = u + sig * streams["imu"].standard_normal(u.shape[0])

    if cfg.model == "quad3d":
        phi, theta = truth.attitude[tick]
        phi_dot, theta_dot = truth.euler_rates[tick]
        p, q, r = _body_rates(phi, theta, phi_dot, theta_dot, u[3])
        e = streams["attitude"].standard_normal(5)
        sa, sg = noise["accel_angle"], noise["gyro_rate"]
        out["attitude_imu"] = att_mod.ImuSample(
            theta + sa * e[0], phi + sa * e[1], p + sg * e[2], q + sg * e[3], r + sg * e[4]
        )

    for name in sensor_schedule(cfg, tick):
        if name == "range":
            try:
                clean = quad1d.h1d(x) if cfg.model == "quad1d" else quad2d.h2d(x, quad2d.Wall2D(cfg.wall_y))
            except quad2d.SingularityError:
                continue  # beam parallel to the wall: no return
            out["range"] = clean + noise["range"] * streams["range"].standard_normal(1)
        elif name == "gps":
            sig = np.array([noise["gps_pos"]] * 3 + [noise["gps_vel"]] * 3)
            out["gps"] = quad3d.h_gps(x) + sig * streams["gps"].standard_normal(6)
        elif name == "mag":
            out["mag"] = wrap_angle(quad3d.h_mag(x) + noise["mag"] * streams["mag"].standard_normal(1))
    return out


# ---------------------------------------------------------------- filters

class _EkfStepper:
    def __init__(self, belief: GaussianBelief, cfg: ScenarioConfig):
        self.belief = belief
        self.joseph = cfg.joseph

    def predict(self, model: ProcessModel, u, dt):
        self.belief = ekf_predict(self.belief, model, u, dt)

    def update(self, model: MeasurementModel, z):
        self.belief, report = ekf_update(self.belief, model, z, joseph=self.joseph)
        return report

    def finish(self, angle_mask) -> GaussianBelief:
        self.belief = GaussianBelief(wrap_state(self.belief.mean, angle_mask), self.belief.covariance)
        return self.belief


class _UkfStepper:
    """Keeps the predicted sigma set so the first update of a tick consumes it directly."""

    def __init__(self, belief: GaussianBelief, cfg: ScenarioConfig):
        self.belief = belief
        self.params = cfg.ukf
        self.pending = None
        self.mask = ANGLE_MASKS[cfg.model]

    def predict(self, model: ProcessModel, u, dt):
        self.pending = (ukf_predict(self.belief, model, u, dt, self.params), model.Q)

    def update(self, model: MeasurementModel, z):
        if self.pending is not None:
            sigmas, Q = self.pending
        else:
            sigmas, Q = compute_sigmas(self.belief.mean, self.belief.covariance, self.params), None
        self.belief, report = ukf_update_report(sigmas, model, Q, z, self.mask)
        self.pending = None
        return report

    def finish(self, angle_mask) -> GaussianBelief:
        if self.pending is not None:
            sigmas, Q = self.pending
            self.belief = unscented_moments(sigmas, Q, self.mask)
            self.pending = None
        return self.belief


# ---------------------------------------------------------------- log

@dataclass
class ScenarioLog:
    model: str
    filter_type: str
    seed: int
    state_names: tuple
    sensor_names: tuple
    t: np.ndarray
    truth: np.ndarray
    controls: np.ndarray
    est: np.ndarray
    cov: np.ndarray
    nees: np.ndarray
    nis: dict
    meas_mask: np.ndarray
    measurements: dict
    imu: np.ndarray
    wall_y: float = quad2d.DEFAULT_WALL_Y
    failed: bool = False
    error: str = ""
    events: list = field(default_factory=list)

    def __len__(self):
        return self.t.shape[0]

    @property
    def cov_diag(self) -> np.ndarray:
        return np.diagonal(self.cov, axis1=1, axis2=2)

    def csv_header(self) -> list[str]:
        return (
            ["t", "model"]
            + [f"truth_{s}" for s in self.state_names]
            + [f"est_{s}" for s in self.state_names]
            + [f"cov_{s}" for s in self.state_names]
            + ["nees"]
            + [f"nis_{s}" for s in self.sensor_names]
            + ["meas_mask"]
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        cd = self.cov_diag
        for k in range(len(self)):
            row = [_fmt(self.t[k]), self.model]
            row += [_fmt(v) for v in self.truth[k]]
            row += [_fmt(v) for v in self.est[k]]
            row += [_fmt(v) for v in cd[k]]
            row.append(_fmt(self.nees[k]))
            row += [_fmt(self.nis[s][k]) for s in self.sensor_names]
            row.append(str(int(self.meas_mask[k])))
            w.writerow(row)
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())


def _fmt(v) -> str:
    return format(float(v), ".17g")


def batch_nees(est, truth, cov, mask) -> np.ndarray:
    """``e^T P^-1 e`` per row, with angle components of ``e`` wrapped."""
    e = wrap_state(est - truth, mask)
    return np.einsum("ki,ki->k", e, np.linalg.solve(cov, e[..., None])[..., 0])


# ---------------------------------------------------------------- runner

@dataclass
class ScenarioData:
    """Everything random about a scenario: truth, per-tick sensor samples and
    the draw used to perturb the initial estimate.  Filters replay it."""

    truth: TruthTrajectory
    samples: list
    init_draw: np.ndarray


def generate_scenario(cfg: ScenarioConfig) -> ScenarioData:
    streams = make_streams(cfg.seed)
    truth = simulate_truth(cfg, streams)
    samples = [sample_sensors(truth, cfg, k, streams) for k in range(cfg.n_steps + 1)]
    return ScenarioData(truth, samples, streams["init"].standard_normal(cfg.initial_state.shape[0]))


def _initial_belief(cfg: ScenarioConfig, data: ScenarioData) -> GaussianBelief:
    x0 = data.truth.states[0]
    mu0 = x0.copy() if cfg.initial_exact else x0 + np.sqrt(cfg.initial_cov_diag) * data.init_draw
    return GaussianBelief(wrap_state(mu0, ANGLE_MASKS[cfg.model]), np.diag(cfg.initial_cov_diag))


def _process_and_sensors(cfg: ScenarioConfig):
    """Per-step process-model factory and the aided measurement models."""
    noise = cfg.noise
    if cfg.model == "quad1d":
        B = quad1d.control_matrix(cfg.dt_imu)
        pm = quad1d.process_model(cfg.Q + B @ B.T * noise["imu_accel"] ** 2)
        return (lambda mean, att: pm), {"range": quad1d.range_model(cfg.R["range"])}
    if cfg.model == "quad2d":
        B = quad2d.control_matrix(cfg.dt_imu)
        pm = quad2d.process_model(cfg.Q + B @ B.T * noise["control"] ** 2)
        return (lambda mean, att: pm), {"range": quad2d.range_model(cfg.R["range"], quad2d.Wall2D(cfg.wall_y))}

    Su = np.diag([noise["imu_accel"] ** 2] * 3 + [noise["imu_gyro"] ** 2])

    def factory(mean, att):
        # control noise enters as B Su B^T on top of the configured Q
        B = quad3d.control_matrix(mean, att, cfg.dt_imu)
        return quad3d.process_model(att, cfg.Q + B @ Su @ B.T, cfg.gravity_sign)

    return factory, {"gps": quad3d.gps_model(cfg.R["gps"]), "mag": quad3d.mag_model(cfg.R["mag"])}


def run_filter(cfg: ScenarioConfig, data: ScenarioData) -> ScenarioLog:
    """Run the filter selected by ``cfg`` over pre-generated scenario data.

    Filter failures stop the run; the log keeps the rows completed so far
    and ``failed`` is set.
    """
    truth, samples = data.truth, data.samples
    K, dt = len(samples) - 1, cfg.dt_imu
    names = STATE_NAMES[cfg.model]
    sensors = SENSOR_NAMES[cfg.model]
    mask = ANGLE_MASKS[cfg.model]
    n = len(names)

    factory, meas_models = _process_and_sensors(cfg)
    belief = _initial_belief(cfg, data)
    stepper = (_EkfStepper if cfg.filter_type == "ekf" else _UkfStepper)(belief, cfg)

    est = np.full((K + 1, n), np.nan)
    cov = np.full((K + 1, n, n), np.nan)
    nis = {s: np.full(K + 1, np.nan) for s in sensors}
    meas = {s: np.full((K + 1, meas_models[s].meas_dim), np.nan) for s in sensors}
    meas_mask = np.zeros(K + 1, dtype=int)
    imu = np.array([z["imu"] for z in samples])
    events: list[str] = []

    est[0], cov[0] = belief.mean, belief.covariance
    attitude_est = None
    if cfg.model == "quad3d":
        phi0, theta0 = truth.attitude[0]
        attitude_est = att_mod.AttitudeEstimate(theta0, phi0)

    failed, error, last = False, "", 0
    for k in range(K):
        z_now, z_next = samples[k], samples[k + 1]
        att = None
        if cfg.model == "quad3d":
            if cfg.attitude_source == "truth":
                att = quad3d.AttitudeInput(*truth.attitude[k])
            else:
                if k > 0:
                    attitude_est = att_mod.linear_complementary(attitude_est, z_now["attitude_imu"], cfg.tau, dt)
                att = quad3d.AttitudeInput(attitude_est.phi, attitude_est.theta)
        try:
            stepper.predict(factory(stepper.belief.mean, att), z_now["imu"], dt)
            for s in sensors:
                if s not in z_next:
                    continue
                meas[s][k + 1] = z_next[s]
                try:
                    report = stepper.update(meas_models[s], z_next[s])
                except quad2d.SingularityError as e:
                    events.append(f"t={truth.t[k + 1]:.6g}: skipped {s} update ({e})")
                    continue
                nis[s][k + 1] = report.nis
                meas_mask[k + 1] |= 1 << sensors.index(s)
            belief = stepper.finish(mask)
        except (FilterError, np.linalg.LinAlgError) as e:
            failed, error = True, f"t={truth.t[k + 1]:.6g}: {type(e).__name__}: {e}"
            log.warning("scenario failed at %s", error)
            break
        est[k + 1], cov[k + 1] = belief.mean, belief.covariance
        last = k + 1

    rows = slice(0, last + 1)
    return ScenarioLog(
        model=cfg.model,
        filter_type=cfg.filter_type,
        seed=cfg.seed,
        state_names=names,
        sensor_names=sensors,
        t=truth.t[rows],
        truth=truth.states[rows],
        controls=truth.controls[rows],
        est=est[rows],
        cov=cov[rows],
        nees=batch_nees(est[rows], truth.states[rows], cov[rows], mask),
        nis={s: v[rows] for s, v in nis.items()},
        meas_mask=meas_mask[rows],
        measurements={s: v[rows] for s, v in meas.items()},
        imu=imu[rows],
        wall_y=cfg.wall_y,
        failed=failed,
        error=error,
        events=events,
    )


def run_scenario(cfg: ScenarioConfig) -> ScenarioLog:
    """Simulate truth and sensors, then run the configured filter over them."""
    return run_filter(cfg, generate_scenario(cfg))
