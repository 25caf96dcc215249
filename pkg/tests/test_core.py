import numpy as np
import pytest
from hypothesis import given, strategies as st

from dronefusion.core import (
    ConditioningError,
    DimensionError,
    GaussianBelief,
    MeasurementModel,
    ProcessModel,
    validate_belief,
    wrap_angle,
    wrap_residual,
    wrap_state,
)


def test_belief_coerces_shapes():
    b = GaussianBelief([[1.0], [2.0]], np.eye(2))
    assert b.mean.shape == (2,)
    assert b.dim == 2


def test_validate_symmetrizes():
    S = np.array([[2.0, 1.0 + 1e-12], [1.0, 2.0]])
    out = validate_belief(GaussianBelief([0.0, 0.0], S))
    np.testing.assert_array_equal(out.covariance, out.covariance.T)


def test_validate_rejects_indefinite():
    with pytest.raises(ConditioningError):
        validate_belief(GaussianBelief([0.0, 0.0], np.diag([1.0, -1.0])))


def test_validate_rejects_nan():
    with pytest.raises(ConditioningError):
        validate_belief(GaussianBelief([np.nan, 0.0], np.eye(2)))


def test_validate_accepts_roundoff_negative_eigenvalue():
    S = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-14 * np.eye(2)
    validate_belief(GaussianBelief([0.0, 0.0], S))


def test_validate_dimension_mismatch():
    with pytest.raises(DimensionError):
        validate_belief(GaussianBelief([0.0, 0.0], np.eye(3)))


def test_model_noise_shape_checked():
    with pytest.raises(DimensionError):
        ProcessModel(2, 1, None, None, np.eye(3))
    with pytest.raises(DimensionError):
        MeasurementModel(1, None, None, np.eye(2))


@given(st.floats(min_value=-1e4, max_value=1e4))
def test_wrap_angle_range(a):
    w = float(wrap_angle(a))
    assert -np.pi < w <= np.pi
    assert np.isclose(np.cos(w), np.cos(a), atol=1e-9) and np.isclose(np.sin(w), np.sin(a), atol=1e-9)


def test_wrap_angle_boundary():
    assert float(wrap_angle(-np.pi)) == pytest.approx(np.pi)
    assert float(wrap_angle(np.pi)) == pytest.approx(np.pi)
    assert float(wrap_angle(3 * np.pi)) == pytest.approx(np.pi)


def test_wrap_residual_only_flagged():
    m = MeasurementModel(2, None, None, np.eye(2), residual_wrap=[False, True])
    np.testing.assert_allclose(wrap_residual([7.0, 7.0], m), [7.0, 7.0 - 2 * np.pi])


def test_wrap_state_leaves_input_alone():
    x = np.array([1.0, 4.0])
    out = wrap_state(x, np.array([False, True]))
    assert x[1] == 4.0 and out[1] == pytest.approx(4.0 - 2 * np.pi)
    assert wrap_state(x, None) is x
