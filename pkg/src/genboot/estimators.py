"""Point estimators: ordinary least squares and isotonic (monotone) LS.

The isotonic pieces are written to run in whatever arithmetic the inputs
carry.  Feed float arrays and you get float64; feed ``fractions.Fraction``
values and every block mean and window average is exact, which is what the
cross-check tests against the max-min characterization rely on.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularDesignError",
    "OneSidedSupportError",
    "OlsFit",
    "IsotonicFit",
    "ols_fit",
    "pava_fit",
    "maxmin_eval",
    "iso_bootstrap_fit",
]

_COND_LIMIT = 1e12


class SingularDesignError(ValueError):
    """Design matrix is rank deficient or numerically singular."""

    def __init__(self, msg: str, condition: float = float("inf")):
        super().__init__(msg)
        self.condition = condition


class OneSidedSupportError(ValueError):
    """All covariates fall on one side of the evaluation point."""


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray
    condition: float


def ols_fit(x: np.ndarray, y: np.ndarray) -> OlsFit:
    """Least-squares coefficients via SVD, no intercept.

    Raises SingularDesignError when the design is rank deficient or its
    condition number exceeds 1e12; the estimate would be numerically
    meaningless past that point.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2:
        raise ValueError("design must be 2-D")
    n, k = x.shape
    if n != y.size:
        raise ValueError(f"design has {n} rows but response has {y.size}")
    if n < 1 or k < 1:
        raise ValueError("need at least one row and one column")
    beta, _, rank, sv = np.linalg.lstsq(x, y, rcond=None)
    cond = float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])
    if rank < k or cond > _COND_LIMIT:
        raise SingularDesignError(
            f"design is singular or ill-conditioned (rank {rank}/{k}, cond {cond:.3g})",
            condition=cond,
        )
    return OlsFit(beta=beta, condition=cond)


# ---------------------------------------------------------------------------
# isotonic regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotonicFit:
    """Non-decreasing step function: value levels[i] on [knots[i], knots[i+1]).

    Right-continuous at every knot; constant-extended on both sides (queries
    left of the first knot return the first level).
    """

    knots: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        if len(self.knots) != len(self.levels) or len(self.knots) == 0:
            raise ValueError("knots and levels must be equal-length and nonempty")

    def evaluate(self, x):
        xs = np.asarray(x)
        idx = np.searchsorted(self.knots, xs, side="right") - 1
        idx = np.clip(idx, 0, len(self.knots) - 1)
        return self.levels[idx]

    def to_csv(self, path_or_buf) -> None:
        from .core import format_float

        lines = ["knot,level"]
        for k, v in zip(self.knots, self.levels):
            lines.append(f"{format_float(float(k))},{format_float(float(v))}")
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)


def _pool_ties(xs, ys):
    """Collapse duplicate x values to (knot, mean y, multiplicity) triples.

    Inputs must already be sorted by x.  Arithmetic is generic: Fractions
    stay exact.
    """
    knots, means, weights = [], [], []
    i, n = 0, len(xs)
    while i < n:
        j = i + 1
        while j < n and xs[j] == xs[i]:
            j += 1
        w = j - i
        total = ys[i]
        for t in range(i + 1, j):
            total = total + ys[t]
        knots.append(xs[i])
        means.append(total / w)
        weights.append(w)
        i = j
    return knots, means, weights


def _pava(means, weights):
    """Weighted pool-adjacent-violators on a prepared sequence.

    Returns the fitted level for each input position.  Classic stack form:
    push each point as its own block, merge backwards while the tail
    decreases.
    """
    lev = []  # block means
    wts = []  # block weights
    cnt = []  # block lengths (in input positions)
    for v, w in zip(means, weights):
        lev.append(v)
        wts.append(w)
        cnt.append(1)
        while len(lev) > 1 and lev[-2] > lev[-1]:
            w2 = wts[-2] + wts[-1]
            m2 = (lev[-2] * wts[-2] + lev[-1] * wts[-1]) / w2
            lev.pop()
            wts.pop()
            top = cnt.pop()
            lev[-1] = m2
            wts[-1] = w2
            cnt[-1] += top
    out = []
    for m, c in zip(lev, cnt):
        out.extend([m] * c)
    return out


def pava_fit(x, y) -> IsotonicFit:
    """Isotonic least-squares fit of y on x.

    Ties in x are pooled to their mean response (with weight = multiplicity)
    before the PAVA sweep, so the fit is a function of x.  The returned step
    function has one knot per distinct x.
    """
    if isinstance(x, np.ndarray) and x.dtype != object:
        xs_arr = np.asarray(x, dtype=np.float64).ravel()
        ys_arr = np.asarray(y, dtype=np.float64).ravel()
        if xs_arr.size != ys_arr.size:
            raise ValueError("x and y must have equal length")
        if xs_arr.size == 0:
            raise ValueError("need at least one point")
        order = np.argsort(xs_arr, kind="stable")
        xs = xs_arr[order].tolist()
        ys = ys_arr[order].tolist()
    else:
        xs = list(x)
        ys = list(y)
        if len(xs) != len(ys):
            raise ValueError("x and y must have equal length")
        if not xs:
            raise ValueError("need at least one point")
        order = sorted(range(len(xs)), key=xs.__getitem__)
        xs = [xs[i] for i in order]
        ys = [ys[i] for i in order]
    knots, means, weights = _pool_ties(xs, ys)
    levels = _pava(means, weights)
    return IsotonicFit(knots=np.asarray(knots), levels=np.asarray(levels))


def maxmin_eval(x, y, x0):
    """Isotonic fit at x0 through the max-min window-average form.

    value = max over a with x_a <= x0 of
            min over b with x_b >= x0 of
            average of y over { i : x_a <= x_i <= x_b }.

    Windows are keyed by covariate *values*, so tied covariates enter their
    windows together.  Requires data on both sides of x0 (weak inequality).
    Arithmetic is generic; Fractions give the exact fit value.
    """
    xs = list(x)
    ys = list(y)
    if len(xs) != len(ys) or not xs:
        raise ValueError("x and y must be equal-length and nonempty")
    order = sorted(range(len(xs)), key=xs.__getitem__)
    xs = [xs[i] for i in order]
    ys = [ys[i] for i in order]
    if not (xs[0] <= x0 and xs[-1] >= x0):
        raise OneSidedSupportError(f"no data on both sides of x0={x0}")
    prefix = [0]
    for v in ys:
        prefix.append(prefix[-1] + v)
    vals = [xs[0]]
    for v in xs[1:]:
        if v != vals[-1]:
            vals.append(v)
    lows = [v for v in vals if v <= x0]
    highs = [v for v in vals if v >= x0]
    best = None
    for va in lows:
        lo = bisect_left(xs, va)
        inner = None
        for vb in highs:
            hi = bisect_right(xs, vb)
            avg = (prefix[hi] - prefix[lo]) / (hi - lo)
            if inner is None or avg < inner:
                inner = avg
        if best is None or inner > best:
            best = inner
    return best


def iso_bootstrap_fit(synthetic, support: tuple, x0: float) -> float:
    """Monotone fit at x0 from a synthetic two-column sample.

    Rows whose covariate leaves [support[0], support[1]] are dropped first
    (generated points can stray outside the observed box); the isotonic fit
    is then evaluated at x0.  Raises OneSidedSupportError when the retained
    covariates don't bracket x0.
    """
    v = synthetic.values
    if v.shape[1] != 2:
        raise ValueError("expected a two-column (x, y) dataset")
    lo, hi = support
    keep = (v[:, 0] >= lo) & (v[:, 0] <= hi)
    x = v[keep, 0]
    y = v[keep, 1]
    if x.size == 0 or x.min() > x0 or x.max() < x0:
        raise OneSidedSupportError(
            f"retained covariates do not bracket x0={x0} (kept {x.size} rows)"
        )
    fit = pava_fit(x, y)
    return float(fit.evaluate(x0))
