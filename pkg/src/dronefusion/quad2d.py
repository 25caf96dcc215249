"""Planar quadrotor at fixed height: state ``[phi, ydot, y]``, control sets roll
directly, range sensor pointed sideways at a wall.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FilterError, MeasurementModel, ProcessModel

STATE_NAMES = ("phi", "ydot", "y")
CONTROL_NAMES = ("phi_cmd",)
DEFAULT_WALL_Y = 5.0
DEFAULT_Q = np.diag([0.0025, 0.01, 0.01])
DEFAULT_R = np.array([[0.01]])
COS_GUARD = 1e-6


class SingularityError(FilterError):
    """Range beam is (nearly) parallel to the wall."""


@dataclass(frozen=True)
class Wall2D:
    wall_y: float = DEFAULT_WALL_Y


def g2d(x, u, dt: float) -> np.ndarray:
    """One step for a single state or a stack of states along the last axis."""
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(u)
    out = np.empty_like(x)
    out[..., 0] = u[0]
    out[..., 1] = x[..., 1] - np.sin(x[..., 0]) * dt
    out[..., 2] = x[..., 2] + x[..., 1] * dt
    return out


def g2d_prime(x, u, dt: float) -> np.ndarray:
    phi = x[0]
    return np.array([
        [0.0, 0.0, 0.0],
        [-np.cos(phi) * dt, 1.0, 0.0],
        [0.0, dt, 1.0],
    ])


def control_matrix(dt: float) -> np.ndarray:
    return np.array([[1.0], [0.0], [0.0]])


def _cos_checked(phi):
    c = np.cos(phi)
    if np.any(np.abs(c) <= COS_GUARD):
        raise SingularityError(f"cos(phi) = {np.min(np.abs(c)):.3e}; range beam parallel to the wall")
    return c


def h2d(x, wall: Wall2D = Wall2D()) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return ((wall.wall_y - x[..., 2]) / _cos_checked(x[..., 0]))[..., None]


def h2d_prime(x, wall: Wall2D = Wall2D()) -> np.ndarray:
    phi, _, y = x
    c = _cos_checked(phi)
    return np.array([[(wall.wall_y - y) * np.sin(phi) / c**2, 0.0, -1.0 / c]])


def range_to_position(r, phi, wall: Wall2D = Wall2D()):
    """Invert the range model for ``y`` given the roll angle."""
    return wall.wall_y - np.asarray(r) * np.cos(phi)


def process_model(Q=DEFAULT_Q) -> ProcessModel:
    return ProcessModel(3, 1, g2d, g2d_prime, Q, vectorized=True)


def range_model(R=DEFAULT_R, wall: Wall2D = Wall2D()) -> MeasurementModel:
    return MeasurementModel(
        1, lambda x: h2d(x, wall), lambda x: h2d_prime(x, wall), R, name="range", vectorized=True
    )
