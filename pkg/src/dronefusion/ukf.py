"""Unscented Kalman filter (additive noise, no state augmentation).

``ukf_predict`` pushes 2N+1 sigma points through ``g`` and returns them;
``ukf_update`` refits the predicted Gaussian, adds Q, maps sigma points
through ``h`` and applies the cross-covariance gain.

By default the update redraws the sigma points from the refitted
``(mean, cov + Q)`` before the measurement transform, so that process
noise reaches the innovation and cross covariances.  With
``redraw=False`` the predicted points are used as they are; Q then only
enters the state covariance and the filter no longer reduces to the
Kalman filter on linear models.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from .core import (
    ConditioningError,
    DimensionError,
    GaussianBelief,
    MeasurementModel,
    NumericError,
    PSD_TOL,
    ProcessModel,
    symmetrize,
    wrap_residual,
    wrap_state,
)
from .ekf import KalmanGainReport, _solve_spd, check_innovation_cov


@dataclass(frozen=True)
class UkfParams:
    """Sigma-point spread ``alpha``, prior term ``beta`` and scaling ``kappa``."""

    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    def lam(self, n: int) -> float:
        return self.alpha**2 * (n + self.kappa) - n

    def gamma(self, n: int) -> float:
        return _gamma(self, n)

    def weights(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Mean and covariance weights for 2n+1 points (read-only arrays)."""
        return _weights(self, n)


@lru_cache(maxsize=64)
def _gamma(params: UkfParams, n: int) -> float:
    c = n + params.lam(n)
    if c <= 0:
        raise ValueError(f"N + lambda = {c} must be positive")
    return float(np.sqrt(c))


@lru_cache(maxsize=64)
def _weights(params: UkfParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    lam = params.lam(n)
    c = n + lam
    if c <= 0:
        raise ValueError(f"N + lambda = {c} must be positive")
    wm = np.full(2 * n + 1, 1.0 / (2.0 * c))
    wc = wm.copy()
    wm[0] = lam / c
    wc[0] = lam / c + (1.0 - params.alpha**2 + params.beta)
    wm.setflags(write=False)
    wc.setflags(write=False)
    return wm, wc


@dataclass(frozen=True)
class SigmaPointSet:
    points: np.ndarray  # (2N+1, N)
    mean_weights: np.ndarray
    cov_weights: np.ndarray
    params: UkfParams = UkfParams()

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def matrix_sqrt(S) -> np.ndarray:
    """Lower-triangular L with ``L @ L.T == S`` for symmetric PSD ``S``.

    Plain Cholesky for positive-definite input.  Singular PSD input is
    factored through its eigendecomposition and re-triangularized with QR.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise DimensionError(f"matrix_sqrt needs a square matrix, got {S.shape}")
    if not np.isfinite(S).all():
        raise ConditioningError("matrix contains non-finite entries")
    # direct LAPACK call; numpy's wrapper costs more than the factorization here.
    # Only the lower triangle is read.
    L, info = lapack.dpotrf(S, lower=1, clean=1)
    if info == 0:
        return L
    w, V = np.linalg.eigh(symmetrize(S))
    if w.min() < -PSD_TOL * max(abs(np.trace(S)), np.finfo(float).tiny):
        raise ConditioningError(f"matrix is indefinite (min eigenvalue {w.min():.3e})")
    B = V * np.sqrt(np.clip(w, 0.0, None))
    r = np.linalg.qr(B.T, mode="r")
    L = r.T
    # fix column signs so the diagonal is non-negative
    signs = np.where(np.diag(L) < 0, -1.0, 1.0)
    return L * signs


def compute_sigmas(mu, Sigma, params: UkfParams) -> SigmaPointSet:
    mu = np.asarray(mu, dtype=float).reshape(-1)
    n = mu.shape[0]
    L = matrix_sqrt(Sigma)
    if L.shape != (n, n):
        raise DimensionError(f"covariance shape {L.shape} does not match mean length {n}")
    spread = params.gamma(n) * L.T  # row i is gamma * column i of L
    points = np.empty((2 * n + 1, n))
    points[0] = mu
    points[1 : n + 1] = mu + spread
    points[n + 1 :] = mu - spread
    wm, wc = params.weights(n)
    return SigmaPointSet(points, wm, wc, params)


def _weighted_mean(points, wm, angle_mask=None) -> np.ndarray:
    # offsets from point 0 keep angle averaging well defined across the cut
    offsets = wrap_state(points - points[0], angle_mask)
    return wrap_state(points[0] + wm @ offsets, angle_mask)


def unscented_moments(
    sigmas: SigmaPointSet,
    Q: Optional[np.ndarray] = None,
    angle_mask=None,
) -> GaussianBelief:
    """Weighted mean and covariance of a sigma set, plus ``Q`` if given."""
    X = sigmas.points
    mu = _weighted_mean(X, sigmas.mean_weights, angle_mask)
    d = wrap_state(X - mu, angle_mask)
    S = (d * sigmas.cov_weights[:, None]).T @ d
    if Q is not None:
        S = S + Q
    return GaussianBelief(mu, symmetrize(S))


def ukf_predict(
    belief: GaussianBelief,
    model: ProcessModel,
    u,
    dt: float,
    params: UkfParams = UkfParams(),
) -> SigmaPointSet:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if belief.dim != model.state_dim:
        raise DimensionError(f"belief has dimension {belief.dim}, model expects {model.state_dim}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sig = compute_sigmas(belief.mean, belief.covariance, params)
    if model.vectorized:
        moved = np.asarray(model.g(sig.points, u, dt), dtype=float)
    else:
        moved = np.array([model.g(x, u, dt) for x in sig.points], dtype=float)
    if not np.isfinite(moved.sum()):
        raise NumericError("transition produced non-finite sigma points")
    return SigmaPointSet(moved, sig.mean_weights, sig.cov_weights, params)


def ukf_update_report(
    sigmas: SigmaPointSet,
    meas_model: MeasurementModel,
    Q,
    z,
    angle_mask=None,
    redraw: bool = True,
) -> tuple[GaussianBelief, KalmanGainReport]:
    """``ukf_update`` that also returns gain, innovation and innovation covariance."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (meas_model.meas_dim,):
        raise DimensionError(f"measurement has shape {z.shape}, expected ({meas_model.meas_dim},)")
    if Q is not None:
        Q = np.asarray(Q, dtype=float)
    prior = unscented_moments(sigmas, Q, angle_mask)
    if redraw and Q is not None and Q.any():
        sigmas = compute_sigmas(prior.mean, prior.covariance, sigmas.params)
    wm, wc = sigmas.mean_weights, sigmas.cov_weights
    X = sigmas.points

    # all 2N+1 points, including the centre one
    if meas_model.vectorized:
        Z = np.asarray(meas_model.h(X), dtype=float)
    else:
        Z = np.array([np.asarray(meas_model.h(x), dtype=float).reshape(-1) for x in X])
    if Z.shape != (X.shape[0], meas_model.meas_dim):
        raise DimensionError(f"h returned shape {Z.shape[1:]}, expected ({meas_model.meas_dim},)")
    wrap = meas_model.residual_wrap
    mu_z = Z[0] + wm @ wrap_state(Z - Z[0], wrap)
    dz = wrap_state(Z - mu_z, wrap)
    dx = wrap_state(X - prior.mean, angle_mask)

    dz_w = dz * wc[:, None]
    S_z = symmetrize(dz_w.T @ dz + meas_model.R)
    S_xz = dx.T @ dz_w
    check_innovation_cov(S_z)
    K = _solve_spd(S_z, S_xz.T).T

    innovation = z - mu_z if wrap is None else wrap_residual(z - mu_z, meas_model)
    mu = wrap_state(prior.mean + K @ innovation, angle_mask)
    # K S_z K^T == S_xz K^T for the optimal gain
    S = symmetrize(prior.covariance - S_xz @ K.T)
    # any NaN or inf entry poisons the sum
    if not np.isfinite(mu.sum() + S.sum()):
        raise NumericError("update produced non-finite values")
    return GaussianBelief(mu, S), KalmanGainReport(K, innovation, S_z)


def ukf_update(
    sigmas: SigmaPointSet,
    meas_model: MeasurementModel,
    Q,
    z,
    angle_mask=None,
    redraw: bool = True,
) -> GaussianBelief:
    """Measurement update on a predicted sigma set.

    Parameters
    ----------
    sigmas : SigmaPointSet
        Output of ``ukf_predict``.
    meas_model : MeasurementModel
        Sensor model; ``R`` is added to the innovation covariance.
    Q : ndarray or None
        Process noise added to the refitted predicted covariance.  Pass
        ``None`` when the set was redrawn from a belief that already
        includes it.
    z : array-like
        Measurement.
    angle_mask : array-like of bool, optional
        State components to treat as angles.
    redraw : bool
        Redraw sigma points from the Q-inflated prior before applying ``h``.
    """
    return ukf_update_report(sigmas, meas_model, Q, z, angle_mask, redraw)[0]
