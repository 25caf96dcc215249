import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dronefusion import quad1d, quad2d
from dronefusion.core import ConditioningError, GaussianBelief, MeasurementModel, ProcessModel
from dronefusion.ekf import ekf_predict, ekf_update
from dronefusion.ukf import (
    UkfParams,
    compute_sigmas,
    matrix_sqrt,
    ukf_predict,
    ukf_update,
    ukf_update_report,
    unscented_moments,
)


def random_spd(rng, n, scale=1.0):
    A = rng.normal(size=(n, n))
    return scale * (A @ A.T + 0.1 * np.eye(n))


@given(st.integers(1, 7), st.floats(1e-3, 1.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_weights_sum_to_one(n, alpha, beta, kappa):
    wm, wc = UkfParams(alpha, beta, kappa).weights(n)
    assert abs(wm.sum() - 1.0) <= 1e-12 * max(1.0, np.abs(wm).max())
    assert wc[1:] == pytest.approx(wm[1:])
    assert wc[0] == pytest.approx(wm[0] + 1 - alpha**2 + beta)


def test_lambda_and_gamma():
    p = UkfParams(1e-3, 2.0, 0.0)
    assert p.lam(7) == pytest.approx(1e-6 * 7 - 7)
    assert p.gamma(7) == pytest.approx(np.sqrt(7e-6))


def test_alpha_domain():
    with pytest.raises(ValueError):
        UkfParams(alpha=0.0)
    with pytest.raises(ValueError):
        UkfParams(alpha=1.5)


def test_weights_are_read_only():
    wm, _ = UkfParams().weights(3)
    with pytest.raises(ValueError):
        wm[0] = 1.0


@settings(max_examples=40)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_sigma_points_reconstruct_moments(n, seed):
    rng = np.random.default_rng(seed)
    mu, S = rng.normal(0, 5, n), random_spd(rng, n)
    sig = compute_sigmas(mu, S, UkfParams(1.0, 0.0, 1.0))
    assert sig.points.shape == (2 * n + 1, n)
    back = unscented_moments(sig)
    np.testing.assert_allclose(back.mean, mu, atol=1e-12)
    np.testing.assert_allclose(back.covariance, S, atol=1e-10)


def test_matrix_sqrt_semidefinite():
    v = np.array([1.0, 2.0, -1.0])
    S = np.outer(v, v)
    L = matrix_sqrt(S)
    np.testing.assert_allclose(L @ L.T, S, atol=1e-12)
    assert np.allclose(L, np.tril(L))


def test_matrix_sqrt_rejects_indefinite():
    with pytest.raises(ConditioningError):
        matrix_sqrt(np.diag([1.0, -1.0]))


def test_linear_predict_matches_ekf():
    rng = np.random.default_rng(3)
    b = GaussianBelief(rng.normal(size=2), random_spd(rng, 2, 0.1))
    pm = quad1d.process_model()
    e = ekf_predict(b, pm, [0.3], 0.05)
    u = unscented_moments(ukf_predict(b, pm, [0.3], 0.05, UkfParams(1.0, 0.0, 1.0)), pm.Q)
    np.testing.assert_allclose(u.mean, e.mean, atol=1e-12)
    np.testing.assert_allclose(u.covariance, e.covariance, atol=1e-12)


@pytest.mark.parametrize("params", [UkfParams(1.0, 0.0, 1.0), UkfParams(0.5, 2.0, 0.0)])
def test_linear_cycle_matches_ekf(params):
    rng = np.random.default_rng(5)
    b = GaussianBelief(rng.normal(size=2), random_spd(rng, 2, 0.1))
    pm, mm = quad1d.process_model(), quad1d.range_model()
    e, _ = ekf_update(ekf_predict(b, pm, [0.3], 0.05), mm, [0.7])
    u = ukf_update(ukf_predict(b, pm, [0.3], 0.05, params), mm, pm.Q, [0.7])
    np.testing.assert_allclose(u.mean, e.mean, atol=1e-12)
    np.testing.assert_allclose(u.covariance, e.covariance, atol=1e-12)


def test_without_redraw_process_noise_skips_innovation():
    b = GaussianBelief([0.0, 5.0], np.eye(2) * 0.1)
    pm, mm = quad1d.process_model(), quad1d.range_model()
    sig = ukf_predict(b, pm, [0.0], 0.05, UkfParams(1.0, 0.0, 1.0))
    _, rep = ukf_update_report(sig, mm, pm.Q, [5.0], redraw=False)
    _, rep_redrawn = ukf_update_report(sig, mm, pm.Q, [5.0])
    # the un-redrawn innovation covariance lacks Q's z entry
    assert rep_redrawn.innovation_cov[0, 0] - rep.innovation_cov[0, 0] == pytest.approx(pm.Q[1, 1])


def test_angle_mean_across_cut():
    mask = np.array([True])
    b = GaussianBelief([np.pi - 0.01], [[0.01]])
    pm = ProcessModel(1, 1, lambda x, u, dt: x, lambda x, u, dt: np.eye(1), [[0.0]], angle_mask=mask)
    sig = ukf_predict(b, pm, [0.0], 0.1, UkfParams(1.0, 0.0, 2.0))
    m = unscented_moments(sig, angle_mask=mask)
    assert m.mean[0] == pytest.approx(np.pi - 0.01, abs=1e-9)
    assert m.covariance[0, 0] == pytest.approx(0.01, rel=1e-9)


def test_nonlinear_update_reduces_uncertainty():
    b = GaussianBelief([0.1, 0.0, 1.0], np.diag([0.01, 0.1, 0.1]))
    pm, mm = quad2d.process_model(), quad2d.range_model()
    sig = ukf_predict(b, pm, [0.1], 0.05)
    out = ukf_update(sig, mm, pm.Q, [4.0])
    assert out.covariance[2, 2] < unscented_moments(sig, pm.Q).covariance[2, 2]


def test_non_vectorized_measurement_path():
    mm = quad1d.range_model()
    looped = MeasurementModel(1, lambda x: x[1:2], mm.h_prime, mm.R)
    b = GaussianBelief([0.0, 3.0], np.eye(2) * 0.2)
    sig = compute_sigmas(b.mean, b.covariance, UkfParams())
    a = ukf_update(sig, mm, None, [3.3])
    c = ukf_update(sig, looped, None, [3.3])
    np.testing.assert_allclose(a.mean, c.mean)
