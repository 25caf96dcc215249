"""Scalar averaging baselines for a directly observed quantity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class RunningMeanState:
    estimate: float = 0.0
    count: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite input: {v!r}")


def batch_mean(measurements: Sequence[float]) -> float:
    """Arithmetic mean of all measurements seen so far."""
    if len(measurements) == 0:
        raise ValueError("batch_mean of an empty sequence")
    _check_finite(*measurements)
    return math.fsum(measurements) / len(measurements)


def recursive_mean(state: RunningMeanState, z: float) -> RunningMeanState:
    """Fold one measurement into a running mean in constant time."""
    _check_finite(z)
    n = state.count + 1
    return RunningMeanState((state.estimate * state.count + z) / n, n)


def exponential_average(prev: float, z: float, alpha: float) -> float:
    """Blend the previous estimate and a new measurement.

    ``alpha`` is the weight kept on ``prev``; ``alpha=0.5`` is the plain
    two-point average.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    _check_finite(prev, z)
    if alpha == 1.0:
        return prev
    if alpha == 0.0:
        return z
    out = alpha * prev + (1.0 - alpha) * z
    # round-off may step one ulp outside the segment
    return min(max(out, min(prev, z)), max(prev, z))
