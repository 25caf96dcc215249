"""Gaussian belief and model containers shared by every filter.

A filter cycle is predict (push the belief through a ``ProcessModel``)
followed by zero or more updates (condition on a ``MeasurementModel``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

PSD_TOL = 1e-9


class FilterError(Exception):
    """Base class for estimation failures."""


class ConditioningError(FilterError):
    """Covariance is non-finite or indefinite beyond tolerance."""


class DimensionError(FilterError, ValueError):
    """Array shapes disagree with the model."""


class NumericError(FilterError):
    """A filter step produced non-finite values or a singular system."""


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        m, S = self.mean, self.covariance
        # filters construct beliefs every step; skip conversion when already in shape
        if not (type(m) is np.ndarray and m.dtype == np.float64 and m.ndim == 1):
            object.__setattr__(self, "mean", np.asarray(m, dtype=float).reshape(-1))
        if not (type(S) is np.ndarray and S.dtype == np.float64 and S.ndim == 2):
            object.__setattr__(self, "covariance", np.atleast_2d(np.asarray(S, dtype=float)))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class ProcessModel:
    """Transition function ``g``, its state Jacobian and the process noise.

    ``g(x, u, dt)`` returns the next state; ``g_prime(x, u, dt)`` the
    N x N Jacobian with respect to ``x``.  ``angle_mask`` flags state
    components that are angles and must stay in (-pi, pi].  ``vectorized``
    declares that ``g`` maps a stack of states (K, N) row by row.
    """

    state_dim: int
    control_dim: int
    g: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    g_prime: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    Q: np.ndarray
    angle_mask: Optional[np.ndarray] = None
    vectorized: bool = False

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape != (self.state_dim, self.state_dim):
            raise DimensionError(f"Q has shape {Q.shape}, expected {(self.state_dim,) * 2}")
        object.__setattr__(self, "Q", Q)
        if self.angle_mask is not None:
            object.__setattr__(self, "angle_mask", np.asarray(self.angle_mask, dtype=bool))


@dataclass(frozen=True)
class MeasurementModel:
    """Measurement function ``h``, its Jacobian and the sensor noise.

    ``residual_wrap`` flags measurement components that are angles; their
    residuals are wrapped into (-pi, pi] before use.  ``vectorized``
    declares that ``h`` maps a stack of states (K, N) to (K, M).
    """

    meas_dim: int
    h: Callable[[np.ndarray], np.ndarray]
    h_prime: Callable[[np.ndarray], np.ndarray]
    R: np.ndarray
    residual_wrap: Optional[np.ndarray] = None
    name: str = field(default="meas", compare=False)
    vectorized: bool = False

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if R.shape != (self.meas_dim, self.meas_dim):
            raise DimensionError(f"R has shape {R.shape}, expected {(self.meas_dim,) * 2}")
        object.__setattr__(self, "R", R)
        if self.residual_wrap is not None:
            object.__setattr__(self, "residual_wrap", np.asarray(self.residual_wrap, dtype=bool))


def symmetrize(S: np.ndarray) -> np.ndarray:
    if S.shape[0] == 1:
        return S
    return 0.5 * (S + S.T)


def validate_belief(b: GaussianBelief) -> GaussianBelief:
    """Return ``b`` with a symmetrized covariance, or raise ``ConditioningError``.

    Eigenvalues down to ``-1e-9 * trace`` are accepted as round-off.
    """
    mu, S = b.mean, b.covariance
    n = mu.shape[0]
    if S.shape != (n, n):
        raise DimensionError(f"covariance shape {S.shape} does not match mean length {n}")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(S))):
        raise ConditioningError("belief contains non-finite entries")
    S = symmetrize(S)
    eig_min = np.linalg.eigvalsh(S).min()
    if eig_min < -PSD_TOL * max(abs(np.trace(S)), np.finfo(float).tiny):
        raise ConditioningError(f"covariance is indefinite (min eigenvalue {eig_min:.3e})")
    return GaussianBelief(mu, S)


def wrap_angle(a):
    """Map angles into (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    # mod lands exact odd multiples of pi on -pi; the interval is closed at +pi
    return np.where(w <= -np.pi, np.pi, w)


def wrap_residual(r, model: MeasurementModel) -> np.ndarray:
    r = np.array(r, dtype=float).reshape(-1)
    if model.residual_wrap is not None:
        r[model.residual_wrap] = wrap_angle(r[model.residual_wrap])
    return r


def wrap_state(x, angle_mask) -> np.ndarray:
    """Wrap the flagged components of ``x`` (last axis); returns a new array
    when anything is wrapped, otherwise ``x`` itself as float."""
    if angle_mask is None:
        return np.asarray(x, dtype=float)
    x = np.array(x, dtype=float)
    x[..., angle_mask] = wrap_angle(x[..., angle_mask])
    return x
