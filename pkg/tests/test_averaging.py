import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dronefusion.averaging import RunningMeanState, batch_mean, exponential_average, recursive_mean

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def fold(values):
    s = RunningMeanState()
    for v in values:
        s = recursive_mean(s, v)
    return s


def test_batch_mean_simple():
    assert batch_mean([1.0, 2.0, 3.0, 4.0]) == 2.5


def test_batch_mean_empty_raises():
    with pytest.raises(ValueError):
        batch_mean([])


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        RunningMeanState(0.0, -1)


def test_recursive_matches_known_sequence():
    s = fold([2.0, 4.0, 9.0])
    assert s.count == 3
    assert s.estimate == pytest.approx(5.0, abs=1e-15)


@given(st.lists(finite, min_size=1, max_size=200))
def test_recursive_equals_batch(values):
    scale = max(1.0, max(abs(v) for v in values))
    assert abs(fold(values).estimate - batch_mean(values)) <= 1e-12 * scale


@given(finite, finite)
def test_alpha_limits_exact(prev, z):
    assert exponential_average(prev, z, 1.0) == prev
    assert exponential_average(prev, z, 0.0) == z


@given(finite, finite, st.floats(min_value=0.0, max_value=1.0))
def test_exponential_average_stays_between(prev, z, alpha):
    out = exponential_average(prev, z, alpha)
    assert min(prev, z) <= out <= max(prev, z)


def test_exponential_half_is_midpoint():
    assert exponential_average(2.0, 4.0, 0.5) == 3.0


@pytest.mark.parametrize("alpha", [-0.1, 1.5, math.nan])
def test_alpha_out_of_range(alpha):
    with pytest.raises(ValueError):
        exponential_average(0.0, 1.0, alpha)


def test_non_finite_measurement_rejected():
    with pytest.raises(ValueError):
        recursive_mean(RunningMeanState(), float("inf"))
    with pytest.raises(ValueError):
        batch_mean([1.0, np.nan])
