"""Scenario configuration: JSON schema, per-model defaults and dotted overrides."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import jsonschema
import numpy as np

from . import quad1d, quad2d, quad3d
from .ukf import UkfParams

MODELS = ("quad1d", "quad2d", "quad3d")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_vec = {"type": "array", "items": _num}
_nonneg_vec = {"type": "array", "items": _nonneg}

SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "dronefusion scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {"enum": list(MODELS)},
        "duration": _pos,
        "dt_imu": _pos,
        "dt_gps": _pos,
        "dt_mag": _pos,
        "dt_range": _pos,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "gravity_sign": {"enum": ["z_up", "ned"]},
        "wall_y": _num,
        "attitude_source": {"enum": ["truth", "complementary"]},
        "control_program": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "process_std": _nonneg_vec,
                "imu_accel": _nonneg,
                "imu_gyro": _nonneg,
                "control": _nonneg,
                "range": _nonneg,
                "gps_pos": _nonneg,
                "gps_vel": _nonneg,
                "mag": _nonneg,
                "accel_angle": _nonneg,
                "gyro_rate": _nonneg,
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "state": _vec,
                "covariance_diag": _nonneg_vec,
                "exact": {"type": "boolean"},
            },
        },
        "filter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["ekf", "ukf"]},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "beta": _num,
                "kappa": _num,
                "joseph": {"type": "boolean"},
                "Q_diag": _nonneg_vec,
                "R_range": _pos,
                "R_gps_diag": {"type": "array", "items": _pos, "minItems": 6, "maxItems": 6},
                "R_mag": _pos,
                "tau": _nonneg,
            },
        },
    },
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass
class ScenarioConfig:
    model: str
    duration: float
    dt_imu: float
    dt_gps: float
    dt_mag: float
    dt_range: float
    seed: int
    gravity_sign: str
    wall_y: float
    attitude_source: str
    control_name: str
    control_params: dict
    noise: dict
    initial_state: np.ndarray
    initial_cov_diag: np.ndarray
    initial_exact: bool
    filter_type: str
    ukf: UkfParams
    joseph: bool
    Q: np.ndarray
    R: dict
    tau: float
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt_imu))

    def ratio(self, dt: float) -> int:
        return int(round(dt / self.dt_imu))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _model_defaults(model: str) -> dict:
    base = {
        "duration": 20.0,
        "dt_imu": 0.05,
        "seed": 0,
        "gravity_sign": "z_up",
        "wall_y": quad2d.DEFAULT_WALL_Y,
        "attitude_source": "truth",
    }
    if model == "quad1d":
        Q, R = quad1d.DEFAULT_Q, quad1d.DEFAULT_R
        base.update(
            control_program={"name": "sine", "params": {"amplitude": 1.0, "period": 5.0}},
            noise={"process_std": list(np.sqrt(np.diag(Q))), "imu_accel": 0.1, "range": math.sqrt(R[0, 0])},
            initial={"state": [0.0, 10.0], "covariance_diag": [0.1, 0.1], "exact": False},
            filter={"Q_diag": list(np.diag(Q)), "R_range": float(R[0, 0])},
        )
    elif model == "quad2d":
        Q, R = quad2d.DEFAULT_Q, quad2d.DEFAULT_R
        base.update(
            duration=10.0,
            control_program={"name": "sine", "params": {"amplitude": 0.3, "period": 4.0}},
            noise={"process_std": list(np.sqrt(np.diag(Q))), "control": 0.0, "range": math.sqrt(R[0, 0])},
            initial={"state": [0.0, 0.0, 0.0], "covariance_diag": [0.0025, 0.1, 0.1], "exact": False},
            filter={"Q_diag": list(np.diag(Q)), "R_range": float(R[0, 0])},
        )
    else:
        Q = quad3d.DEFAULT_Q
        Rg, Rm = quad3d.DEFAULT_R_GPS, quad3d.DEFAULT_R_MAG
        base.update(
            duration=30.0,
            dt_mag=0.1,
            dt_gps=0.5,
            control_program={
                "name": "circle",
                "params": {"radius": 5.0, "period": 20.0, "tilt": 0.1, "yaw_rate": 0.05},
            },
            noise={
                "process_std": list(np.sqrt(np.diag(Q))),
                "imu_accel": 0.1,
                "imu_gyro": 0.01,
                "gps_pos": math.sqrt(Rg[0, 0]),
                "gps_vel": math.sqrt(Rg[3, 3]),
                "mag": math.sqrt(Rm[0, 0]),
                "accel_angle": 0.05,
                "gyro_rate": 0.01,
            },
            initial={
                "state": [0.0, 0.0, -10.0, 0.0, 0.0, 0.0, 0.0],
                "covariance_diag": [1.0, 1.0, 1.0, 0.1, 0.1, 0.1, 0.01],
                "exact": False,
            },
            filter={
                "Q_diag": list(np.diag(Q)),
                "R_gps_diag": list(np.diag(Rg)),
                "R_mag": float(Rm[0, 0]),
                "tau": 0.5,
            },
        )
    base["filter"] = {"type": "ekf", "alpha": 1e-3, "beta": 2.0, "kappa": 0.0, "joseph": False,
                      "tau": 0.5, **base["filter"]}
    return base


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "control_program":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _is_multiple(dt: float, base: float) -> bool:
    k = dt / base
    return abs(k - round(k)) < 1e-9 * max(1.0, k) and round(k) >= 1


def _check_len(path: str, seq, n: int):
    if len(seq) != n:
        raise ConfigError(path, f"expected {n} entries, got {len(seq)}")


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a scenario dict against ``SCHEMA`` and resolve model defaults."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(path, e.message) from None

    d = _merge(_model_defaults(data["model"]), data)
    model = d["model"]
    n = {"quad1d": 2, "quad2d": 3, "quad3d": 7}[model]

    dt = d["dt_imu"]
    for key in ("dt_gps", "dt_mag", "dt_range"):
        d.setdefault(key, dt)  # unspecified sensors report every IMU tick
        if not _is_multiple(d[key], dt):
            raise ConfigError(key, f"{d[key]} is not a positive integer multiple of dt_imu={dt}")
    if d["duration"] < dt:
        raise ConfigError("duration", "shorter than one IMU period")

    noise = d["noise"]
    _check_len("noise.process_std", noise["process_std"], n)
    init = d["initial"]
    _check_len("initial.state", init["state"], n)
    _check_len("initial.covariance_diag", init["covariance_diag"], n)
    filt = d["filter"]
    _check_len("filter.Q_diag", filt["Q_diag"], n)

    from .simulator import CONTROL_PROGRAMS  # circular at import time

    if d["control_program"]["name"] not in CONTROL_PROGRAMS[model]:
        raise ConfigError(
            "control_program.name",
            f"unknown profile {d['control_program']['name']!r} for {model}; "
            f"choose from {sorted(CONTROL_PROGRAMS[model])}",
        )

    R = {}
    if model in ("quad1d", "quad2d"):
        R["range"] = np.array([[filt["R_range"]]])
    else:
        R["gps"] = np.diag(filt["R_gps_diag"])
        R["mag"] = np.array([[filt["R_mag"]]])

    try:
        ukf = UkfParams(filt["alpha"], filt["beta"], filt["kappa"])
        ukf.gamma(n)
    except ValueError as e:
        raise ConfigError("filter.alpha", str(e)) from None

    return ScenarioConfig(
        model=model,
        duration=float(d["duration"]),
        dt_imu=float(dt),
        dt_gps=float(d["dt_gps"]),
        dt_mag=float(d["dt_mag"]),
        dt_range=float(d["dt_range"]),
        seed=int(d["seed"]),
        gravity_sign=d["gravity_sign"],
        wall_y=float(d["wall_y"]),
        attitude_source=d["attitude_source"],
        control_name=d["control_program"]["name"],
        control_params=dict(d["control_program"].get("params", {})),
        noise=noise,
        initial_state=np.array(init["state"], dtype=float),
        initial_cov_diag=np.array(init["covariance_diag"], dtype=float),
        initial_exact=bool(init["exact"]),
        filter_type=filt["type"],
        ukf=ukf,
        joseph=bool(filt["joseph"]),
        Q=np.diag(np.array(filt["Q_diag"], dtype=float)),
        R=R,
        tau=float(filt["tau"]),
        raw=d,
    )


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``key.path=value`` overrides; values are parsed as JSON when possible.

    ``filter=ukf`` is shorthand for ``filter.type=ukf``.
    """
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, text = item.split("=", 1)
        value = _parse_value(text)
        parts = key.strip().split(".")
        if parts == ["filter"] and isinstance(value, str):
            parts = ["filter", "type"]
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, f"{p} is not an object")
        node[parts[-1]] = value
    return data


def load_config(path: str, overrides: Optional[list[str]] = None, env: Optional[dict] = None) -> ScenarioConfig:
    """Read, override and validate a JSON scenario file.

    ``DRONEFUSION_SEED`` in ``env`` replaces the seed after overrides.
    """
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}", e.msg) from None
    if not isinstance(data, dict):
        raise ConfigError("<root>", "top level must be an object")
    data = apply_overrides(data, overrides or [])
    if env and env.get("DRONEFUSION_SEED") is not None:
        try:
            data["seed"] = int(env["DRONEFUSION_SEED"])
        except ValueError:
            raise ConfigError("DRONEFUSION_SEED", "must be an integer") from None
    return parse_config(data)
