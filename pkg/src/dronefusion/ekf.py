"""Extended Kalman filter predict/update.

When the model Jacobians do not depend on the state these functions are
exactly the linear Kalman filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    GaussianBelief,
    MeasurementModel,
    NumericError,
    ProcessModel,
    symmetrize,
    wrap_residual,
)

MAX_INNOVATION_COND = 1e12


@dataclass(frozen=True)
class KalmanGainReport:
    gain: np.ndarray
    innovation: np.ndarray
    innovation_cov: np.ndarray

    @property
    def nis(self) -> float:
        """Normalized innovation squared."""
        return float(self.innovation @ _solve_spd(self.innovation_cov, self.innovation))


def _finite(*arrays):
    # a single NaN or inf anywhere makes the total non-finite
    if not np.isfinite(sum(a.sum() for a in arrays)):
        raise NumericError("filter step produced non-finite values")


def check_innovation_cov(S: np.ndarray) -> None:
    """Raise ``NumericError`` if ``S`` is singular to working precision."""
    if S.shape == (1, 1):
        ok = np.isfinite(S[0, 0]) and S[0, 0] > 0
    else:
        w = np.linalg.eigvalsh(S)
        ok = w[0] > 0 and w[-1] <= MAX_INNOVATION_COND * w[0]
    if not ok:
        raise NumericError("innovation covariance is singular")


def _solve_spd(S: np.ndarray, b: np.ndarray) -> np.ndarray:
    # scalar innovations dominate the scenarios; skip LAPACK for them
    if S.shape == (1, 1):
        return b / S[0, 0]
    return np.linalg.solve(S, b)


def ekf_predict(belief: GaussianBelief, model: ProcessModel, u, dt: float) -> GaussianBelief:
    """Propagate a belief through the transition model.

    The Jacobian is evaluated at the prior mean.

    Parameters
    ----------
    belief : GaussianBelief
        Posterior from the previous step.
    model : ProcessModel
        Transition function, Jacobian and process noise.
    u : array-like
        Control input.
    dt : float
        Step length in seconds, must be positive.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    mu, S = belief.mean, belief.covariance
    if mu.shape[0] != model.state_dim:
        raise DimensionError(f"belief has dimension {mu.shape[0]}, model expects {model.state_dim}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    mu_bar = np.asarray(model.g(mu, u, dt), dtype=float)
    G = np.asarray(model.g_prime(mu, u, dt), dtype=float)
    if mu_bar.shape != mu.shape or G.shape != S.shape:
        raise DimensionError("process model returned wrongly shaped output")
    S_bar = symmetrize(G @ S @ G.T + model.Q)
    _finite(mu_bar, S_bar)
    return GaussianBelief(mu_bar, S_bar)


def ekf_update(
    belief: GaussianBelief,
    model: MeasurementModel,
    z,
    joseph: bool = False,
) -> tuple[GaussianBelief, KalmanGainReport]:
    """Condition a predicted belief on one measurement.

    Uses ``(I - K H) P`` for the posterior covariance unless ``joseph`` is
    set, in which case the Joseph form ``(I - K H) P (I - K H)^T + K R K^T``
    is used instead.
    """
    mu, S = belief.mean, belief.covariance
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (model.meas_dim,):
        raise DimensionError(f"measurement has shape {z.shape}, expected ({model.meas_dim},)")
    _finite(z)

    H = np.atleast_2d(np.asarray(model.h_prime(mu), dtype=float))
    if H.shape != (model.meas_dim, mu.shape[0]):
        raise DimensionError(f"h_prime returned shape {H.shape}")
    innovation = wrap_residual(z - np.asarray(model.h(mu), dtype=float).reshape(-1), model)
    S_z = symmetrize(H @ S @ H.T + model.R)
    check_innovation_cov(S_z)
    # K = P H^T S^-1, via solve on the symmetric S
    K = _solve_spd(S_z, H @ S).T

    mu_new = mu + K @ innovation
    I_KH = np.eye(mu.shape[0]) - K @ H
    if joseph:
        S_new = I_KH @ S @ I_KH.T + K @ model.R @ K.T
    else:
        S_new = I_KH @ S
    S_new = symmetrize(S_new)
    _finite(mu_new, S_new)
    return GaussianBelief(mu_new, S_new), KalmanGainReport(K, innovation, S_z)
