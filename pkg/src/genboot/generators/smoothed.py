"""Kernel-smoothed resampling: a data row plus tophat (uniform-ball) noise.

The tophat kernel in p dimensions is uniform on the axis-scaled ball
{v : sum_j (v_j/h_j)^2 <= 1}; bandwidths follow Silverman's rule per
coordinate with d = p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, as_generator


@dataclass(frozen=True)
class SmoothedPayload:
    data: Dataset
    bandwidth: np.ndarray

    def __post_init__(self):
        bw = np.asarray(self.bandwidth, dtype=np.float64)
        if bw.shape != (self.data.p,) or np.any(bw <= 0):
            raise ValueError("bandwidth must be positive per dimension")
        object.__setattr__(self, "bandwidth", bw)


def silverman_bandwidth(data: Dataset) -> np.ndarray:
    """h_j = sigma_j * (4 / ((d+2) n))^(1/(d+4)) with d = p.

    sigma_j is the per-column sample standard deviation (ddof=1).
    """
    if data.n < 2:
        raise ValueError("bandwidth needs n >= 2")
    sd = np.std(data.values, axis=0, ddof=1)
    if np.any(sd <= 0):
        bad = int(np.argmin(sd)) + 1
        raise ValueError(f"column {bad} has zero variance; no bandwidth exists")
    d = data.p
    factor = (4.0 / ((d + 2) * data.n)) ** (1.0 / (d + 4))
    return sd * factor


def fit_smoothed_payload(data: Dataset) -> SmoothedPayload:
    return SmoothedPayload(data=data, bandwidth=silverman_bandwidth(data))


def sample_smoothed_payload(payload: SmoothedPayload, m: int, rng) -> Dataset:
    """Each row: uniformly chosen data row + uniform draw from the h-ball."""
    gen = as_generator(rng)
    p = payload.data.p
    if m == 0:
        return Dataset(np.empty((0, p)))
    idx = gen.integers(0, payload.data.n, size=m)
    centers = payload.data.values[idx]
    direction = gen.standard_normal((m, p))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radius = gen.random(m) ** (1.0 / p)
    offsets = direction / norms * radius[:, None] * payload.bandwidth
    return Dataset(centers + offsets)
