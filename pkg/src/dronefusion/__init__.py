"""Quadrotor state estimation: averaging baselines, (E)KF, UKF,
complementary attitude filters and a multirate scenario simulator."""

from .core import (
    ConditioningError,
    DimensionError,
    FilterError,
    GaussianBelief,
    MeasurementModel,
    NumericError,
    ProcessModel,
    validate_belief,
    wrap_residual,
)
from .ekf import KalmanGainReport, ekf_predict, ekf_update
from .ukf import SigmaPointSet, UkfParams, compute_sigmas, matrix_sqrt, ukf_predict, ukf_update

__version__ = "0.1.0"
