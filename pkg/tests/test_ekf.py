import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dronefusion import quad1d, quad2d
from dronefusion.core import DimensionError, GaussianBelief, MeasurementModel, NumericError, ProcessModel
from dronefusion.ekf import ekf_predict, ekf_update


def linear_model(A, Q):
    return ProcessModel(A.shape[0], 1, lambda x, u, dt: A @ x, lambda x, u, dt: A, Q)


def test_predict_matches_closed_form():
    A = np.array([[1.0, 0.0], [0.1, 1.0]])
    Q = np.diag([0.01, 0.02])
    b = GaussianBelief([1.0, 2.0], np.array([[0.5, 0.1], [0.1, 0.4]]))
    out = ekf_predict(b, linear_model(A, Q), [0.0], 0.1)
    np.testing.assert_allclose(out.mean, A @ b.mean)
    np.testing.assert_allclose(out.covariance, A @ b.covariance @ A.T + Q)


def test_scalar_update_closed_form():
    # scalar Kalman update: K = P/(P+R)
    m = MeasurementModel(1, lambda x: x, lambda x: np.eye(1), [[0.25]])
    b, rep = ekf_update(GaussianBelief([0.0], [[1.0]]), m, [1.0])
    assert rep.gain[0, 0] == pytest.approx(0.8)
    assert b.mean[0] == pytest.approx(0.8)
    assert b.covariance[0, 0] == pytest.approx(0.2)
    assert rep.nis == pytest.approx(1.0 / 1.25)


def test_joseph_matches_standard_for_optimal_gain():
    b = GaussianBelief([0.3, 9.0], np.array([[0.2, 0.05], [0.05, 0.3]]))
    m = quad1d.range_model()
    std, _ = ekf_update(b, m, [9.2])
    jos, _ = ekf_update(b, m, [9.2], joseph=True)
    np.testing.assert_allclose(std.covariance, jos.covariance, atol=1e-14)
    np.testing.assert_allclose(std.mean, jos.mean)


@settings(max_examples=50)
@given(
    arrays(float, 2, elements=st.floats(-10, 10)),
    st.floats(0.01, 5.0),
    st.floats(0.01, 5.0),
    st.floats(-0.9, 0.9),
    st.floats(1e-3, 1.0),
    st.floats(-20, 20),
)
def test_update_shrinks_covariance(mu, s1, s2, rho, r, z):
    c = rho * np.sqrt(s1 * s2)
    b = GaussianBelief(mu, [[s1, c], [c, s2]])
    out, _ = ekf_update(b, quad1d.range_model([[r]]), [z])
    assert np.trace(out.covariance) <= np.trace(b.covariance) + 1e-12
    assert np.linalg.eigvalsh(out.covariance).min() >= -1e-12


def test_nonlinear_jacobian_evaluated_at_prior_mean():
    b = GaussianBelief([0.2, 0.0, 0.0], np.eye(3) * 0.1)
    out = ekf_predict(b, quad2d.process_model(), [0.0], 0.1)
    G = quad2d.g2d_prime(b.mean, [0.0], 0.1)
    np.testing.assert_allclose(out.covariance, G @ b.covariance @ G.T + quad2d.DEFAULT_Q)


def test_rejects_bad_inputs():
    b = GaussianBelief([0.0, 0.0], np.eye(2))
    with pytest.raises(ValueError):
        ekf_predict(b, quad1d.process_model(), [0.0], 0.0)
    with pytest.raises(DimensionError):
        ekf_update(b, quad1d.range_model(), [1.0, 2.0])
    with pytest.raises(DimensionError):
        ekf_predict(GaussianBelief([0.0], [[1.0]]), quad1d.process_model(), [0.0], 0.1)


def test_singular_innovation_raises():
    m = MeasurementModel(1, lambda x: x[1:], lambda x: np.array([[0.0, 1.0]]), [[0.0]])
    with pytest.raises(NumericError):
        ekf_update(GaussianBelief([0.0, 0.0], np.diag([1.0, 0.0])), m, [0.0])


def test_angle_innovation_wrapped():
    m = MeasurementModel(1, lambda x: x, lambda x: np.eye(1), [[0.01]], residual_wrap=[True])
    _, rep = ekf_update(GaussianBelief([3.1], [[0.1]]), m, [-3.1])
    assert rep.innovation[0] == pytest.approx(2 * np.pi - 6.2)
