"""Vertical-only quadrotor: state ``[zdot, z]``, control ``[zddot]``, downward range sensor."""
from __future__ import annotations

import numpy as np

from .core import MeasurementModel, ProcessModel

STATE_NAMES = ("zdot", "z")
CONTROL_NAMES = ("zddot",)
DEFAULT_Q = np.diag([0.01, 0.01])
DEFAULT_R = np.array([[0.01]])


def g1d(x, u, dt: float) -> np.ndarray:
    """Euler step; position advances with the pre-update velocity.

    Accepts a single state or a stack of states along the last axis.
    """
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(u)
    out = np.empty_like(x)
    out[..., 0] = x[..., 0] + u[0] * dt
    out[..., 1] = x[..., 1] + x[..., 0] * dt
    return out


def g1d_prime(dt: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [dt, 1.0]])


def control_matrix(dt: float) -> np.ndarray:
    """Jacobian of ``g1d`` with respect to the control."""
    return np.array([[dt], [0.0]])


def h1d(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., 1:2].copy()


def h1d_prime(x=None) -> np.ndarray:
    return np.array([[0.0, 1.0]])


def process_model(Q=DEFAULT_Q) -> ProcessModel:
    return ProcessModel(2, 1, g1d, lambda x, u, dt: g1d_prime(dt), Q, vectorized=True)


def range_model(R=DEFAULT_R) -> MeasurementModel:
    return MeasurementModel(1, h1d, h1d_prime, R, name="range", vectorized=True)
