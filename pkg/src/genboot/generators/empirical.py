"""Resampling from the raw empirical measure via the quantile map.

A uniform u in (0, 1] selects data row i when (i-1)/n < u <= i/n, i.e.
i = ceil(u*n); sampling m rows is m independent uniforms pushed through
that map.  Equivalent to drawing rows uniformly with replacement, phrased
as a generator so all four variants share the noise-pushforward shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, as_generator


@dataclass(frozen=True)
class EmpiricalPayload:
    data: Dataset


def fit_empirical_payload(data: Dataset) -> EmpiricalPayload:
    if data.n < 1:
        raise ValueError("empirical fit needs at least one row")
    return EmpiricalPayload(data=data)


def quantile_map(data: Dataset, u) -> np.ndarray:
    """Rows selected by uniforms u in (0, 1]; vectorized over u."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u > 1.0):
        raise ValueError("u must lie in (0, 1]")
    idx = np.ceil(u * data.n).astype(np.int64) - 1
    idx = np.clip(idx, 0, data.n - 1)
    return data.values[idx]


def sample_empirical(payload: EmpiricalPayload, m: int, rng) -> Dataset:
    gen = as_generator(rng)
    if m == 0:
        return Dataset(np.empty((0, payload.data.p)))
    u = 1.0 - gen.random(m)  # (0, 1]
    return Dataset(quantile_map(payload.data, u))
