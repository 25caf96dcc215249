import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dronefusion import quad1d, quad2d, quad3d
from dronefusion.verify import numeric_jacobian

angles = st.floats(-np.pi, np.pi)


def test_g1d_linear_form():
    x, u, dt = np.array([1.0, 2.0]), np.array([0.5]), 0.1
    np.testing.assert_allclose(quad1d.g1d(x, u, dt), quad1d.g1d_prime(dt) @ x + quad1d.control_matrix(dt) @ u)


def test_g1d_vectorized_matches_rows():
    X = np.random.default_rng(0).normal(size=(5, 2))
    np.testing.assert_array_equal(quad1d.g1d(X, [0.2], 0.05), np.array([quad1d.g1d(x, [0.2], 0.05) for x in X]))


def test_h1d():
    assert quad1d.h1d(np.array([3.0, 7.0])).tolist() == [7.0]


def test_g2d_values():
    out = quad2d.g2d(np.array([0.3, 1.0, 2.0]), [0.4], 0.1)
    np.testing.assert_allclose(out, [0.4, 1.0 - np.sin(0.3) * 0.1, 2.1])


def test_h2d_level_flight():
    assert quad2d.h2d(np.array([0.0, 0.0, 1.0]), quad2d.Wall2D(5.0))[0] == pytest.approx(4.0)


def test_h2d_singularity_guard():
    with pytest.raises(quad2d.SingularityError):
        quad2d.h2d(np.array([np.pi / 2, 0.0, 0.0]))
    with pytest.raises(quad2d.SingularityError):
        quad2d.h2d_prime(np.array([np.pi / 2, 0.0, 0.0]))


@given(st.floats(-1.2, 1.2), st.floats(-5, 4.9))
def test_range_inversion_roundtrip(phi, y):
    wall = quad2d.Wall2D(5.0)
    r = quad2d.h2d(np.array([phi, 0.0, y]), wall)[0]
    assert quad2d.range_to_position(r, phi, wall) == pytest.approx(y, abs=1e-9)


@settings(max_examples=60)
@given(angles, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_rotation_orthonormal(psi, phi, theta):
    R = quad3d.rotation_bg(quad3d.AttitudeInput(phi, theta), psi)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rotation_is_zyx_product():
    phi, theta, psi = 0.1, -0.2, 0.7
    c, s = np.cos, np.sin
    Rx = np.array([[1, 0, 0], [0, c(phi), -s(phi)], [0, s(phi), c(phi)]])
    Ry = np.array([[c(theta), 0, s(theta)], [0, 1, 0], [-s(theta), 0, c(theta)]])
    Rz = np.array([[c(psi), -s(psi), 0], [s(psi), c(psi), 0], [0, 0, 1]])
    np.testing.assert_allclose(quad3d.rotation_bg(quad3d.AttitudeInput(phi, theta), psi), Rz @ Ry @ Rx, atol=1e-15)


@settings(max_examples=60)
@given(st.floats(-3.0, 3.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_rotation_prime_finite_difference(psi, phi, theta):
    att = quad3d.AttitudeInput(phi, theta)
    fd = numeric_jacobian(lambda p: quad3d.rotation_bg(att, float(p)), np.float64(psi))
    np.testing.assert_allclose(fd, quad3d.rotation_bg_prime(att, psi), atol=1e-8)


def test_gravity_sign():
    x = np.zeros(7)
    zero = quad3d.AttitudeInput(0.0, 0.0)
    down = quad3d.g3d(x, zero, np.zeros(4), 0.1, "z_up")[5]
    up = quad3d.g3d(x, zero, np.zeros(4), 0.1, "ned")[5]
    assert down == pytest.approx(-quad3d.G_ACCEL * 0.1)
    assert up == pytest.approx(quad3d.G_ACCEL * 0.1)
    with pytest.raises(ValueError):
        quad3d.process_model(zero, gravity="up")


def test_hover_thrust_cancels_gravity():
    att = quad3d.AttitudeInput(0.0, 0.0)
    u = np.array([0.0, 0.0, quad3d.G_ACCEL, 0.0])
    out = quad3d.g3d(np.zeros(7), att, u, 0.1)
    np.testing.assert_allclose(out, np.zeros(7), atol=1e-15)


def test_heading_wraps():
    att = quad3d.AttitudeInput(0.0, 0.0)
    x = np.zeros(7)
    x[6] = np.pi - 0.01
    out = quad3d.g3d(x, att, np.array([0, 0, 0, 1.0]), 0.1)
    assert -np.pi < out[6] < 0


def test_control_matrix_finite_difference():
    rng = np.random.default_rng(1)
    x, u, att = rng.normal(size=7), rng.normal(size=4), quad3d.AttitudeInput(0.2, -0.1)
    x[6] = 0.5
    fd = numeric_jacobian(lambda v: quad3d.g3d(x, att, v, 0.05), u)
    np.testing.assert_allclose(fd, quad3d.control_matrix(x, att, 0.05), atol=1e-8)


def test_measurement_models_select_components():
    x = np.arange(7.0) / 10
    np.testing.assert_array_equal(quad3d.h_gps(x), x[:6])
    np.testing.assert_array_equal(quad3d.h_mag(x), x[6:])
    np.testing.assert_array_equal(quad3d.h_gps_prime() @ x, x[:6])
    np.testing.assert_array_equal(quad3d.h_mag_prime() @ x, x[6:])
