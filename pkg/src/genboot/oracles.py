"""Distribution distances and the pivot's limiting law.

Everything here is deliberately independent of the estimation code so it can
sit on the other side of a cross-check: W1 has a closed-form quantile
construction *and* an LP/brute-force coupling oracle, the isotonic fit has a
partition-enumeration oracle, and the limit law is sampled directly from its
Brownian definition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import as_generator

__all__ = [
    "ChernoffConfig",
    "w1_1d",
    "w1_lp",
    "ks_distance",
    "chernoff_sample",
    "chernoff_limit_scale",
    "isotonic_partition_oracle",
]


# ---------------------------------------------------------------------------
# Wasserstein-1 between empirical measures on the line
# ---------------------------------------------------------------------------


def w1_1d(a, b) -> float:
    """W1 distance between the empirical distributions of two 1-D samples.

    Equal sizes reduce to mean |sorted(a) - sorted(b)|.  Unequal sizes use
    the quantile-function form: integrate |F_a^{-1}(u) - F_b^{-1}(u)| du
    over the merged grid of jump points i/n_a and j/n_b.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("w1_1d needs nonempty samples")
    a = np.sort(a)
    b = np.sort(b)
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    na, nb = a.size, b.size
    cuts = np.union1d(np.arange(1, na + 1) / na, np.arange(1, nb + 1) / nb)
    widths = np.diff(np.concatenate([[0.0], cuts]))
    # quantile at the left edge of each strip: F^{-1}(u) for u in the strip
    u_mid = cuts - widths / 2.0
    qa = a[np.minimum((np.ceil(u_mid * na) - 1).astype(int), na - 1)]
    qb = b[np.minimum((np.ceil(u_mid * nb) - 1).astype(int), nb - 1)]
    return float(np.sum(widths * np.abs(qa - qb)))


def w1_lp(a, b) -> float:
    """Brute-force W1 oracle via optimal coupling.

    Equal sample sizes n <= 7: exact minimum over all permutation couplings.
    Otherwise: transportation LP solved with scipy's linprog (HiGHS).
    Only meant for tests; cost grows factorially / polynomially.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("w1_lp needs nonempty samples")
    na, nb = a.size, b.size
    if na == nb and na <= 7:
        best = math.inf
        for perm in itertools.permutations(range(nb)):
            cost = sum(abs(a[i] - b[perm[i]]) for i in range(na))
            best = min(best, cost)
        return best / na
    from scipy.optimize import linprog

    cost = np.abs(a[:, None] - b[None, :]).ravel()
    # row sums = 1/na, column sums = 1/nb
    a_eq = np.zeros((na + nb, na * nb))
    for i in range(na):
        a_eq[i, i * nb : (i + 1) * nb] = 1.0
    for j in range(nb):
        a_eq[na + j, j::nb] = 1.0
    b_eq = np.concatenate([np.full(na, 1.0 / na), np.full(nb, 1.0 / nb)])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def ks_distance(a, b) -> float:
    """Kolmogorov-Smirnov distance sup_t |F_a(t) - F_b(t)| between two samples.

    Evaluated over the pooled sample points, where the sup is attained.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs nonempty samples")
    pool = np.concatenate([a, b])
    fa = np.searchsorted(np.sort(a), pool, side="right") / a.size
    fb = np.searchsorted(np.sort(b), pool, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# Chernoff limit law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChernoffConfig:
    """Grid-sampler settings: domain [-t_max, t_max], step delta, draw count."""

    t_max: float = 3.0
    delta: float = 0.001
    draws: int = 100000

    def __post_init__(self):
        if self.t_max <= 0 or self.delta <= 0:
            raise ValueError("t_max and delta must be positive")
        if self.t_max / self.delta > 1e7:
            raise ValueError("grid too fine: t_max/delta must be <= 1e7")
        if self.draws < 0:
            raise ValueError("draws must be >= 0")


def chernoff_sample(cfg: ChernoffConfig, rng) -> np.ndarray:
    """Sample D = 2 * argmax_{|t| <= t_max} (B(t) - t^2) on a grid.

    B is two-sided standard Brownian motion pinned at B(0) = 0, built from
    independent one-sided paths with Gaussian increments of variance delta.
    The argmax over the symmetric grid {-t_max, ..., -delta, 0, delta, ...,
    t_max} is doubled.  Truncation at |t| = 3 and delta = 1e-3 keep grid and
    truncation bias well below Monte Carlo noise at the default scale.

    Vectorized in chunks so memory stays bounded for large draw counts.
    """
    gen = as_generator(rng)
    t_max, delta, draws = cfg.t_max, cfg.delta, cfg.draws
    m = int(round(t_max / delta))
    if m < 1:
        raise ValueError("t_max/delta must be >= 1")
    grid = np.arange(1, m + 1) * delta
    drift = grid**2  # subtracted from both wings
    out = np.empty(draws)
    chunk = max(1, min(draws, int(4e6 // max(m, 1)) + 1))
    sd = math.sqrt(delta)
    for lo in range(0, draws, chunk):
        k = min(chunk, draws - lo)
        # right wing then left wing, each cumsum of N(0, delta) increments
        right = np.cumsum(gen.normal(0.0, sd, size=(k, m)), axis=1) - drift
        left = np.cumsum(gen.normal(0.0, sd, size=(k, m)), axis=1) - drift
        r_arg = np.argmax(right, axis=1)
        l_arg = np.argmax(left, axis=1)
        r_val = right[np.arange(k), r_arg]
        l_val = left[np.arange(k), l_arg]
        t_star = np.where(r_val >= l_val, grid[r_arg], -grid[l_arg])
        best = np.maximum(r_val, l_val)
        t_star = np.where(best <= 0.0, 0.0, t_star)  # origin wins at value 0
        out[lo : lo + k] = 2.0 * t_star
    return out


def chernoff_limit_scale(sigma2: float, fprime: float) -> float:
    """Scale c = (sigma^2 * f'/2)^(1/3) multiplying the limit draw.

    The cube-root-rate pivot at x0 converges to c * D with D from
    chernoff_sample; sigma2 is the noise variance and fprime the slope of
    the regression function at x0 (both must be positive).
    """
    if sigma2 <= 0 or fprime <= 0:
        raise ValueError("sigma2 and fprime must be positive")
    return float((sigma2 * fprime / 2.0) ** (1.0 / 3.0))


# ---------------------------------------------------------------------------
# isotonic regression oracle by partition enumeration
# ---------------------------------------------------------------------------


def isotonic_partition_oracle(y, weights=None) -> list[float]:
    """Exact isotonic LS fit of a sequence by enumerating contiguous partitions.

    For n points there are 2^(n-1) ways to split 1..n into contiguous
    blocks; each induces the block-mean fit, and the best *feasible*
    (non-decreasing block means) fit is the projection.  O(2^n), tests only.

    Works in whatever arithmetic the inputs carry (floats or Fractions).
    """
    ys = list(y)
    n = len(ys)
    if n == 0:
        raise ValueError("need at least one point")
    ws = list(weights) if weights is not None else [1] * n
    if len(ws) != n:
        raise ValueError("weights length mismatch")
    best_cost = None
    best_fit = None
    for mask in range(1 << (n - 1)):
        bounds = [0]
        for cut in range(n - 1):
            if mask >> cut & 1:
                bounds.append(cut + 1)
        bounds.append(n)
        means = []
        ok = True
        for b0, b1 in zip(bounds[:-1], bounds[1:]):
            wsum = sum(ws[b0:b1])
            mean = sum(w * v for w, v in zip(ws[b0:b1], ys[b0:b1])) / wsum
            if means and mean < means[-1]:
                ok = False
                break
            means.append(mean)
        if not ok:
            continue
        fit = []
        for (b0, b1), mv in zip(zip(bounds[:-1], bounds[1:]), means):
            fit.extend([mv] * (b1 - b0))
        cost = sum(w * (v - f) ** 2 for w, v, f in zip(ws, ys, fit))
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_fit = fit
    return best_fit
