"""Shared primitives: seeded RNG streams, the Dataset container, and the
synthetic data-generating processes used by the coverage experiments.

Reproducibility contract: every stochastic routine takes an explicit
``RngStream`` (or an ``np.random.Generator`` derived from one) and never
touches global RNG state.  A given (seed, stream_id) pair replays the same
bytes on every call, and distinct stream_ids are statistically independent,
so parallel work can be sliced by stream without coordination.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "Dataset",
    "DgpSpec",
    "as_generator",
    "sample_beta25",
    "gen_ols_data",
    "gen_iso_data",
    "write_csv",
    "read_csv",
    "dataset_to_text",
    "dataset_from_text",
    "format_float",
]

# 17 significant digits round-trips any float64 exactly.
_FLOAT_FMT = "%.17g"


def format_float(x: float) -> str:
    """Render a float with enough digits to reparse bit-exactly."""
    return _FLOAT_FMT % float(x)


@dataclass(frozen=True)
class RngStream:
    """Identity of one logical random stream: (seed, stream_id).

    Streams are realized as Philox counter-based generators keyed through
    ``SeedSequence(seed, spawn_key=(stream_id,))``, so any stream can be
    reconstructed independently of how many others exist.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def shifted(self, offset: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + offset)


def as_generator(rng) -> np.random.Generator:
    """Accept either an RngStream or a ready Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# data container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Immutable (n, p) float64 matrix of observations.

    Rows are observations.  For regression problems the response is the
    last column by convention.  n may be zero (an empty sample is a legal
    value, e.g. from drawing zero synthetic points); fitting operations
    require n >= 1 and say so themselves.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"Dataset needs a 2-D array, got ndim={v.ndim}")
        if v.shape[1] < 1:
            raise ValueError("Dataset needs at least one column")
        if not np.all(np.isfinite(v)):
            raise ValueError("Dataset entries must be finite")
        # Copy unless the array is already frozen; never flip flags on a
        # caller-owned buffer.
        if v.flags.writeable or not v.flags.c_contiguous:
            v = np.array(v, order="C")
            v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column_bounds(self) -> np.ndarray:
        """Per-column (min, max), shape (p, 2). Requires n >= 1."""
        if self.n == 0:
            raise ValueError("column_bounds needs at least one row")
        return np.stack([self.values.min(axis=0), self.values.max(axis=0)], axis=1)


# ---------------------------------------------------------------------------
# data-generating processes
# ---------------------------------------------------------------------------

_DGP_KINDS = ("ols_regular", "iso_regression")


@dataclass(frozen=True)
class DgpSpec:
    """Which synthetic problem to draw, and at what size.

    kind "ols_regular": p total columns (p-1 covariates + response), p >= 7.
    kind "iso_regression": always two columns (x, y); p is ignored and
    normalized to 2.
    """

    kind: str
    n: int
    p: int = 2

    def __post_init__(self):
        if self.kind not in _DGP_KINDS:
            raise ValueError(f"unknown DGP kind {self.kind!r}, want one of {_DGP_KINDS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "ols_regular":
            if self.p < 7:
                # five Beta covariates + at least one oscillatory + response
                raise ValueError("ols_regular needs p >= 7")
        else:
            object.__setattr__(self, "p", 2)


def sample_beta25(rng, m: int) -> np.ndarray:
    """m draws of Beta(2, 5) via the gamma ratio g1/(g1+g2).

    Built from two standard-gamma draws rather than Generator.beta so the
    byte stream is pinned by this module, not by numpy's beta internals.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    gen = as_generator(rng)
    g1 = gen.standard_gamma(2.0, size=m)
    g2 = gen.standard_gamma(5.0, size=m)
    return g1 / (g1 + g2)


def gen_ols_data(spec: DgpSpec, rng) -> tuple[Dataset, np.ndarray]:
    """Draw the linear-model design and response.

    Covariates (1-based column index j):
      j in 1..5: iid Beta(2, 5)
      j in 6..p-1: sin((j+1)S/p) + cos((j+1)S/p) + U[-0.5, 0.5] noise,
        with one shared S ~ U[-4, 4] per row
    Response: y = sum of all covariates + U[-7, 7] noise.  No intercept.

    Returns (dataset with columns [x1..x_{p-1}, y], true coefficient
    vector = ones(p-1)).
    """
    if spec.kind != "ols_regular":
        raise ValueError("gen_ols_data wants an ols_regular spec")
    gen = as_generator(rng)
    n, p = spec.n, spec.p
    k = p - 1  # covariate count

    x = np.empty((n, k))
    x[:, :5] = sample_beta25(gen, 5 * n).reshape(n, 5, order="F")
    s = gen.uniform(-4.0, 4.0, size=n)
    for j in range(6, k + 1):  # 1-based covariate index
        phase = (j + 1) * s / p
        x[:, j - 1] = np.sin(phase) + np.cos(phase) + gen.uniform(-0.5, 0.5, size=n)
    y = x.sum(axis=1) + gen.uniform(-7.0, 7.0, size=n)
    data = Dataset(np.hstack([x, y[:, None]]))
    return data, np.ones(k)


def gen_iso_data(spec: DgpSpec, rng) -> Dataset:
    """Draw the monotone-regression sample: X ~ U[0,1], Y = X + U[-0.01, 0.01].

    The regression function is f0(x) = x; the noise variance is
    0.02^2 / 12 = 1/30000.
    """
    if spec.kind != "iso_regression":
        raise ValueError("gen_iso_data wants an iso_regression spec")
    gen = as_generator(rng)
    x = gen.uniform(0.0, 1.0, size=spec.n)
    y = x + gen.uniform(-0.01, 0.01, size=spec.n)
    return Dataset(np.column_stack([x, y]))


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def _header(p: int) -> str:
    return ",".join([f"x{j}" for j in range(1, p)] + ["y"])


def write_csv(data: Dataset, path_or_buf) -> None:
    """Write a Dataset as CSV with header x1,...,x{p-1},y and 17-digit floats."""
    lines = [_header(data.p)]
    for row in data.values:
        lines.append(",".join(_FLOAT_FMT % v for v in row))
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_buf, (str, bytes, os.PathLike)):
        with open(path_or_buf, "w") as fh:
            fh.write(text)
    else:
        path_or_buf.write(text)


def dataset_to_text(data: Dataset) -> str:
    buf = io.StringIO()
    write_csv(data, buf)
    return buf.getvalue()


def read_csv(path_or_buf) -> Dataset:
    """Inverse of write_csv. Round-trips float64 values bit-exactly."""
    if isinstance(path_or_buf, (str, bytes, os.PathLike)):
        with open(path_or_buf) as fh:
            text = fh.read()
    else:
        text = path_or_buf.read()
    return dataset_from_text(text)


def dataset_from_text(text: str) -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty CSV")
    cols = lines[0].split(",")
    p = len(cols)
    if cols != _header(p).split(","):
        raise ValueError(f"unexpected CSV header {lines[0]!r}")
    if len(lines) == 1:
        return Dataset(np.empty((0, p)))
    rows = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    if rows.shape[1] != p:
        raise ValueError("row width does not match header")
    return Dataset(rows)
