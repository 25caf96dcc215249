"""Full quadrotor position/velocity/yaw model.

State ``[x, y, z, xdot, ydot, zdot, psi]`` in a north-east-down global
frame, control ``[ax_b, ay_b, az_b, psi_dot]`` with accelerations in the
body frame.  Roll and pitch are not estimated here; they enter through an
``AttitudeInput`` supplied by the attitude filter (or truth in simulation).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MeasurementModel, ProcessModel, wrap_angle

STATE_NAMES = ("x", "y", "z", "xdot", "ydot", "zdot", "psi")
CONTROL_NAMES = ("ax_b", "ay_b", "az_b", "psi_dot")
PSI = 6
ANGLE_MASK = np.array([False] * 6 + [True])

G_ACCEL = 9.80665
# "z_up": zdot receives -g*dt (up-positive z, the default); "ned": +g*dt (down-positive z)
GRAVITY_SIGNS = {"z_up": -1.0, "ned": 1.0}

DEFAULT_Q = np.diag([1e-4] * 3 + [1e-2] * 3 + [1e-4])
DEFAULT_R_GPS = np.diag([1.0] * 3 + [0.09] * 3)
DEFAULT_R_MAG = np.array([[0.01]])


@dataclass(frozen=True)
class AttitudeInput:
    phi: float = 0.0
    theta: float = 0.0


def rotation_bg(att: AttitudeInput, psi: float) -> np.ndarray:
    """Body-to-global rotation, roll-pitch-yaw (1-2-3) order."""
    sf, cf = np.sin(att.phi), np.cos(att.phi)
    st, ct = np.sin(att.theta), np.cos(att.theta)
    sp, cp = np.sin(psi), np.cos(psi)
    return np.array([
        [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
        [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
        [-st, ct * sf, ct * cf],
    ])


def rotation_bg_prime(att: AttitudeInput, psi: float) -> np.ndarray:
    """Derivative of ``rotation_bg`` with respect to yaw."""
    sf, cf = np.sin(att.phi), np.cos(att.phi)
    st, ct = np.sin(att.theta), np.cos(att.theta)
    sp, cp = np.sin(psi), np.cos(psi)
    return np.array([
        [-ct * sp, -sf * st * sp - cf * cp, -cf * st * sp + sf * cp],
        [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
        [0.0, 0.0, 0.0],
    ])


def g3d(x, att: AttitudeInput, u, dt: float, gravity: str = "z_up", g_accel: float = G_ACCEL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    out = x.copy()
    out[0:3] += x[3:6] * dt
    out[3:6] += rotation_bg(att, x[PSI]) @ u[0:3] * dt
    out[5] += GRAVITY_SIGNS[gravity] * g_accel * dt
    out[PSI] = wrap_angle(x[PSI] + u[3] * dt)
    return out


def g3d_prime(x, att: AttitudeInput, u, dt: float) -> np.ndarray:
    G = np.eye(7)
    G[0, 3] = G[1, 4] = G[2, 5] = dt
    G[3:6, PSI] = rotation_bg_prime(att, x[PSI]) @ np.asarray(u, dtype=float)[0:3] * dt
    return G


def control_matrix(x, att: AttitudeInput, dt: float) -> np.ndarray:
    """Jacobian of ``g3d`` with respect to the control vector."""
    B = np.zeros((7, 4))
    B[3:6, 0:3] = rotation_bg(att, x[PSI]) * dt
    B[PSI, 3] = dt
    return B


def h_gps(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., 0:6].copy()


def h_gps_prime(x=None) -> np.ndarray:
    return np.hstack([np.eye(6), np.zeros((6, 1))])


def h_mag(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., PSI : PSI + 1].copy()


def h_mag_prime(x=None) -> np.ndarray:
    H = np.zeros((1, 7))
    H[0, PSI] = 1.0
    return H


def process_model(att: AttitudeInput, Q=DEFAULT_Q, gravity: str = "z_up") -> ProcessModel:
    if gravity not in GRAVITY_SIGNS:
        raise ValueError(f"gravity must be one of {sorted(GRAVITY_SIGNS)}, got {gravity!r}")
    return ProcessModel(
        7,
        4,
        lambda x, u, dt: g3d(x, att, u, dt, gravity),
        lambda x, u, dt: g3d_prime(x, att, u, dt),
        Q,
        angle_mask=ANGLE_MASK,
    )


def gps_model(R=DEFAULT_R_GPS) -> MeasurementModel:
    return MeasurementModel(6, h_gps, h_gps_prime, R, name="gps", vectorized=True)


def mag_model(R=DEFAULT_R_MAG) -> MeasurementModel:
    return MeasurementModel(
        1, h_mag, h_mag_prime, R, residual_wrap=np.array([True]), name="mag", vectorized=True
    )
