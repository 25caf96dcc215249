import numpy as np
import pytest

from dronefusion.config import parse_config
from dronefusion.metrics import aggregate_metrics, chi2_interval, compute_metrics, range_baseline
from dronefusion.simulator import run_scenario


def test_chi2_interval_known_values():
    lo, hi = chi2_interval(1)
    assert lo == pytest.approx(0.000982, rel=1e-3)
    assert hi == pytest.approx(5.0239, rel=1e-4)


def test_rmse_and_envelope():
    log = run_scenario(parse_config({"model": "quad1d", "seed": 3}))
    m = compute_metrics(log)
    err = log.est[:, 1] - log.truth[:, 1]
    assert m["rmse"]["z"] == pytest.approx(np.sqrt(np.mean(err**2)))
    assert 0.0 <= m["nees_envelope_fraction"] <= 1.0
    assert m["update_counts"]["range"] == len(log) - 1


def test_quad1d_baseline_is_raw_range():
    log = run_scenario(parse_config({"model": "quad1d", "seed": 3, "duration": 1.0}))
    b = range_baseline(log)
    assert np.isnan(b[0])
    np.testing.assert_array_equal(b[1:], log.measurements["range"][1:, 0])


def test_aggregate_of_one_equals_run():
    log = run_scenario(parse_config({"model": "quad2d", "seed": 1, "duration": 2.0}))
    m = compute_metrics(log)
    agg = aggregate_metrics([m])
    assert agg["rmse_mean"] == m["rmse"]
    assert agg["mean_nees"] == pytest.approx(m["mean_nees"])
    assert agg["nees_envelope_fraction"] == pytest.approx(m["nees_envelope_fraction"])
    assert agg["position_rmse_mean"] == m["position_rmse"]


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate_metrics([])
