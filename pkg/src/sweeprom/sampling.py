"""Parameter samplers over the (theta1, theta2) box.

Every set is reproducible from (sampler, seed, bounds, count).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import THETA1_RANGE, THETA2_RANGE

SAMPLERS = ("uniform", "lhs", "grid")
DEFAULT_BOUNDS = np.array([[THETA1_RANGE[0], THETA2_RANGE[0]],
                           [THETA1_RANGE[1], THETA2_RANGE[1]]])


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray  # (count, 2)
    sampler: str
    seed: int
    bounds: np.ndarray  # (2, 2)

    @property
    def count(self) -> int:
        return self.points.shape[0]


def sample_parameters(sampler: str, count: int, seed: int, bounds=None) -> SampleSet:
    """Draw ``count`` points: uniform random, Latin hypercube, or grid."""
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler '{sampler}'; choose from {SAMPLERS}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    bounds = DEFAULT_BOUNDS if bounds is None else np.asarray(bounds, dtype=np.float64)
    lo, hi = bounds[0], bounds[1]
    rng = np.random.default_rng(seed)

    if sampler == "uniform":
        unit = rng.uniform(size=(count, 2))
    elif sampler == "lhs":
        # one point per stratum, strata shuffled independently per axis
        unit = np.empty((count, 2))
        for dim in range(2):
            strata = rng.permutation(count)
            unit[:, dim] = (strata + rng.uniform(size=count)) / count
    else:
        n1 = int(np.sqrt(count))
        while count % n1 != 0:
            n1 -= 1
        n2 = count // n1
        g1 = np.linspace(0.0, 1.0, n1) if n1 > 1 else np.array([0.5])
        g2 = np.linspace(0.0, 1.0, n2) if n2 > 1 else np.array([0.5])
        unit = np.array([(a, b) for a in g1 for b in g2])

    points = lo + unit * (hi - lo)
    return SampleSet(points=points, sampler=sampler, seed=seed, bounds=bounds)
