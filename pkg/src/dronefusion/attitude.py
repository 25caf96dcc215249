"""Roll/pitch complementary filters.

Both filters blend a gyro-propagated prediction (weight ``tau/(tau+Ts)``)
with accelerometer-derived angles (weight ``Ts/(tau+Ts)``).  The linear
filter treats body rates as Euler-angle rates; the nonlinear one
propagates a quaternion with the body rates and extracts roll and pitch
from it.  Yaw is an input, never estimated here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FilterError

GIMBAL_LIMIT = 1.55


class DegenerateAttitudeError(FilterError):
    """Pitch too close to +-pi/2 for Euler extraction."""


@dataclass(frozen=True)
class AttitudeEstimate:
    theta: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class ImuSample:
    theta_acc: float
    phi_acc: float
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0


@dataclass(frozen=True)
class Quaternion:
    """Hamilton quaternion for the body-to-global rotation."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def __mul__(self, o: "Quaternion") -> "Quaternion":
        return Quaternion(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )

    def to_rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def roll(self) -> float:
        w, x, y, z = self.w, self.x, self.y, self.z
        return math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))

    def pitch(self) -> float:
        s = 2 * (self.w * self.y - self.z * self.x)
        return math.asin(max(-1.0, min(1.0, s)))

    def yaw(self) -> float:
        w, x, y, z = self.w, self.x, self.y, self.z
        return math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))

    def to_euler(self) -> tuple[float, float, float]:
        """(roll, pitch, yaw)."""
        return self.roll(), self.pitch(), self.yaw()


def quat_from_euler(phi: float, theta: float, psi: float) -> Quaternion:
    """Quaternion of ``Rz(psi) @ Ry(theta) @ Rx(phi)``, matching ``rotation_bg``."""
    cf, sf = math.cos(phi / 2), math.sin(phi / 2)
    ct, st = math.cos(theta / 2), math.sin(theta / 2)
    cp, sp = math.cos(psi / 2), math.sin(psi / 2)
    return Quaternion(
        cf * ct * cp + sf * st * sp,
        sf * ct * cp - cf * st * sp,
        cf * st * cp + sf * ct * sp,
        cf * ct * sp - sf * st * cp,
    )


def _rate_quaternion(p: float, q: float, r: float, Ts: float) -> Quaternion:
    rate = math.sqrt(p * p + q * q + r * r)
    angle = rate * Ts
    if angle == 0.0:
        return Quaternion()
    s = math.sin(angle / 2) / rate
    return Quaternion(math.cos(angle / 2), p * s, q * s, r * s)


def quat_integrate_body_rates(q: Quaternion, p: float, q_rate: float, r: float, Ts: float) -> Quaternion:
    """Rotate ``q`` by body rates held constant over ``Ts``.

    The increment is the exact axis-angle quaternion of ``(p, q, r) * Ts``.
    Body-frame increments compose on the right of a body-to-global
    quaternion.
    """
    if Ts <= 0:
        raise ValueError(f"Ts must be positive, got {Ts}")
    return (q * _rate_quaternion(p, q_rate, r, Ts)).normalized()


def _blend_weights(tau: float, Ts: float) -> tuple[float, float]:
    if tau < 0 or Ts <= 0:
        raise ValueError(f"need tau >= 0 and Ts > 0, got tau={tau}, Ts={Ts}")
    return tau / (tau + Ts), Ts / (tau + Ts)


def linear_complementary(prev: AttitudeEstimate, z: ImuSample, tau: float, Ts: float) -> AttitudeEstimate:
    a, b = _blend_weights(tau, Ts)
    theta = a * (prev.theta + Ts * z.q) + b * z.theta_acc
    phi = a * (prev.phi + Ts * z.p) + b * z.phi_acc
    return AttitudeEstimate(theta, phi)


def nonlinear_complementary(
    prev: AttitudeEstimate,
    psi: float,
    z: ImuSample,
    tau: float,
    Ts: float,
    literal: bool = False,
) -> AttitudeEstimate:
    """Quaternion-propagated complementary filter.

    With ``literal=True`` the rate term ``Ts * rate`` is added on top of the
    quaternion prediction as well, which applies the gyro twice.
    """
    a, b = _blend_weights(tau, Ts)
    q_bar = quat_integrate_body_rates(quat_from_euler(prev.phi, prev.theta, psi), z.p, z.q, z.r, Ts)
    theta_bar = q_bar.pitch()
    if abs(theta_bar) > GIMBAL_LIMIT:
        raise DegenerateAttitudeError(f"predicted pitch {theta_bar:.4f} rad is in the gimbal-lock region")
    phi_bar = q_bar.roll()
    if literal:
        theta_bar += Ts * z.q
        phi_bar += Ts * z.p
    return AttitudeEstimate(a * theta_bar + b * z.theta_acc, a * phi_bar + b * z.phi_acc)
