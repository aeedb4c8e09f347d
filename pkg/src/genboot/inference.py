"""Bootstrap confidence regions and the Monte Carlo coverage harness.

Stream discipline: replication r owns the stream-id block
[r*2^20, (r+1)*2^20).  Slot 0 draws the data, slots 1..B draw the bootstrap
samples, and two fixed slots near the top of the block drive generator
fitting and the centering draw.  Every quantity is therefore a pure
function of (seed, replication index), which is what makes worker-count
independence and replay possible.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DgpSpec, RngStream, gen_iso_data, gen_ols_data
from .estimators import OneSidedSupportError, SingularDesignError, ols_fit, pava_fit, iso_bootstrap_fit
from .generators import FlowConfig, GanConfig, fit_generator, sample

__all__ = [
    "REPLICATION_BLOCK",
    "AllTrialsInvalidError",
    "TrialConfig",
    "TrialResult",
    "CoverageReport",
    "order_quantile",
    "ols_trial",
    "iso_trial",
    "run_trial",
    "run_coverage",
    "report_to_csv",
    "trials_to_csv",
]

logger = logging.getLogger("genboot.inference")

REPLICATION_BLOCK = 1 << 20
_SLOT_DATA = 0
_SLOT_FIT = REPLICATION_BLOCK - 16
_SLOT_CENTER = REPLICATION_BLOCK - 15

_ISO_X0 = 0.5
_ISO_SUPPORT = (0.0, 1.0)
_CENTER_WINDOW = 1e-4  # half-width of the centering window around x0

_PROBLEMS = ("ols", "iso")
_METHODS = ("empirical", "smoothed", "gan", "flow")


class AllTrialsInvalidError(RuntimeError):
    """Every replication exceeded its bootstrap skip budget."""


@dataclass(frozen=True)
class TrialConfig:
    problem: str
    method: str
    n: int
    p: int = 2
    boot_reps: int = 1000
    center_draws: int = 50000
    levels: tuple = (0.90, 0.95)
    seed: int = 0
    skip_budget: float = 0.10
    gan: GanConfig = field(default_factory=GanConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self):
        if self.problem not in _PROBLEMS:
            raise ValueError(f"problem must be one of {_PROBLEMS}")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.problem == "ols" and self.p < 7:
            raise ValueError("ols problem needs p >= 7")
        if self.boot_reps < 10:
            raise ValueError("boot_reps must be >= 10")
        if self.boot_reps > REPLICATION_BLOCK - 32:
            raise ValueError("boot_reps exceeds the per-replication stream block")
        if self.center_draws < 10:
            raise ValueError("center_draws must be >= 10")
        if not self.levels or any(not 0.0 < a < 1.0 for a in self.levels):
            raise ValueError("levels must lie strictly inside (0, 1)")
        if not 0.0 <= self.skip_budget < 1.0:
            raise ValueError("skip_budget must be in [0, 1)")


@dataclass(frozen=True)
class TrialResult:
    covered: dict
    statistic: float
    thresholds: dict  # level -> (lo, hi); covered <=> lo <= statistic <= hi
    valid: bool
    skipped: int = 0


def order_quantile(values, alpha: float) -> float:
    """k-th smallest with k = ceil(alpha * B).

    The tiny slack keeps float roundoff at exact-integer alpha*B (e.g.
    0.9 * 10) from bumping k by one.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("order_quantile needs nonempty values")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    k = math.ceil(alpha * vals.size - 1e-9)
    k = min(max(k, 1), vals.size)
    return float(np.partition(vals, k - 1)[k - 1])


def _covered_flags(statistic: float, stats: np.ndarray, levels, equal_tailed: bool):
    covered, thresholds = {}, {}
    for a in levels:
        if equal_tailed:
            lo = order_quantile(stats, (1.0 - a) / 2.0)
            hi = order_quantile(stats, (1.0 + a) / 2.0)
        else:
            lo, hi = float("-inf"), order_quantile(stats, a)
        thresholds[a] = (lo, hi)
        covered[a] = bool(lo <= statistic <= hi)
    return covered, thresholds


def _invalid_result(statistic: float, levels, skipped: int) -> TrialResult:
    nan = float("nan")
    return TrialResult(
        covered={a: False for a in levels},
        statistic=statistic,
        thresholds={a: (nan, nan) for a in levels},
        valid=False,
        skipped=skipped,
    )


def _fit_model(cfg: TrialConfig, data, rng):
    return fit_generator(data, cfg.method, gan_cfg=cfg.gan, flow_cfg=cfg.flow, rng=rng)


def ols_trial(cfg: TrialConfig, rng: RngStream) -> TrialResult:
    """One replication of the linear-model coverage experiment.

    Statistic n*||beta_hat - beta_0||^2 against the upper alpha bootstrap
    quantile of n*||beta_b - center||^2; center is the plugin estimate for
    the empirical method and the large-synthetic-draw refit otherwise.
    """
    if cfg.problem != "ols":
        raise ValueError("ols_trial wants an ols config")
    B = cfg.boot_reps
    data, beta0 = gen_ols_data(DgpSpec("ols_regular", cfg.n, cfg.p), rng.shifted(_SLOT_DATA))
    x, y = data.values[:, :-1], data.values[:, -1]
    beta_hat = ols_fit(x, y).beta
    statistic = cfg.n * float(np.sum((beta_hat - beta0) ** 2))

    model = _fit_model(cfg, data, rng.shifted(_SLOT_FIT))
    if cfg.method == "empirical":
        center = beta_hat
    else:
        big = sample(model, cfg.center_draws, rng.shifted(_SLOT_CENTER))
        try:
            center = ols_fit(big.values[:, :-1], big.values[:, -1]).beta
        except SingularDesignError:
            return _invalid_result(statistic, cfg.levels, skipped=0)

    stats = np.empty(B)
    kept = 0
    skipped = 0
    for b in range(1, B + 1):
        synth = sample(model, cfg.n, rng.shifted(b))
        try:
            beta_b = ols_fit(synth.values[:, :-1], synth.values[:, -1]).beta
        except SingularDesignError:
            skipped += 1
            continue
        stats[kept] = cfg.n * float(np.sum((beta_b - center) ** 2))
        kept += 1
    if kept == 0 or skipped > cfg.skip_budget * B:
        return _invalid_result(statistic, cfg.levels, skipped)
    covered, thresholds = _covered_flags(statistic, stats[:kept], cfg.levels, equal_tailed=False)
    return TrialResult(covered, statistic, thresholds, valid=True, skipped=skipped)


def _window_center(values: np.ndarray, x0: float) -> float:
    """Mean response in a window around x0, doubling the half-width until
    at least 10 points land inside (the fixed window can be empty)."""
    xs, ys = values[:, 0], values[:, 1]
    half = _CENTER_WINDOW
    for _ in range(64):
        mask = np.abs(xs - x0) <= half
        count = int(mask.sum())
        if count >= 10:
            return float(ys[mask].mean())
        logger.debug("centering window +-%g holds %d points; doubling", half, count)
        half *= 2.0
    raise AllTrialsInvalidError("centering window never accumulated 10 points")


def iso_trial(cfg: TrialConfig, rng: RngStream) -> TrialResult:
    """One replication of the monotone-regression coverage experiment.

    Pivot n^(1/3) * (f_hat(x0) - f0(x0)) with f0(x) = x, x0 = 0.5, against
    equal-tailed bootstrap quantiles of n^(1/3) * (f_b(x0) - center).
    """
    if cfg.problem != "iso":
        raise ValueError("iso_trial wants an iso config")
    B = cfg.boot_reps
    rate = float(cfg.n) ** (1.0 / 3.0)
    data = gen_iso_data(DgpSpec("iso_regression", cfg.n), rng.shifted(_SLOT_DATA))
    fit = pava_fit(data.values[:, 0], data.values[:, 1])
    fhat_x0 = float(fit.evaluate(_ISO_X0))
    statistic = rate * (fhat_x0 - _ISO_X0)  # f0(0.5) = 0.5 exactly

    model = _fit_model(cfg, data, rng.shifted(_SLOT_FIT))
    if cfg.method == "empirical":
        center = fhat_x0
    else:
        big = sample(model, cfg.center_draws, rng.shifted(_SLOT_CENTER))
        center = _window_center(big.values, _ISO_X0)

    stats = np.empty(B)
    kept = 0
    skipped = 0
    for b in range(1, B + 1):
        synth = sample(model, cfg.n, rng.shifted(b))
        try:
            f_b = iso_bootstrap_fit(synth, _ISO_SUPPORT, _ISO_X0)
        except OneSidedSupportError:
            skipped += 1
            continue
        stats[kept] = rate * (f_b - center)
        kept += 1
    if kept == 0 or skipped > cfg.skip_budget * B:
        return _invalid_result(statistic, cfg.levels, skipped)
    covered, thresholds = _covered_flags(statistic, stats[:kept], cfg.levels, equal_tailed=True)
    return TrialResult(covered, statistic, thresholds, valid=True, skipped=skipped)


def run_trial(cfg: TrialConfig, replication: int) -> TrialResult:
    """Run replication r on its own stream block."""
    if replication < 0:
        raise ValueError("replication must be >= 0")
    rng = RngStream(cfg.seed, replication * REPLICATION_BLOCK)
    if cfg.problem == "ols":
        return ols_trial(cfg, rng)
    return iso_trial(cfg, rng)


@dataclass(frozen=True)
class CoverageReport:
    problem: str
    method: str
    p: int
    n: int
    boot_reps: int
    valid_reps: int
    invalid_trials: int
    coverage: dict  # level -> proportion over valid trials
    mc_se: dict  # level -> sqrt(c*(1-c)/R)

    def row(self, level: float):
        return self.coverage[level], self.mc_se[level]


def _run_one(args) -> TrialResult:
    cfg, r = args
    return run_trial(cfg, r)


def run_coverage(cfg: TrialConfig, reps: int, workers: int = 1, progress=None, collect_trials=None) -> CoverageReport:
    """R independent replications, aggregated over the valid ones.

    Deterministic for fixed (cfg, reps) whatever `workers` is: replication r
    always uses stream block r, and aggregation runs in replication order.
    `collect_trials`, if given, receives the ordered TrialResult list.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    results = []
    if workers == 1:
        for r in range(reps):
            results.append(run_trial(cfg, r))
            if progress:
                progress(r + 1, reps)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r, res in enumerate(pool.map(_run_one, [(cfg, r) for r in range(reps)])):
                results.append(res)
                if progress:
                    progress(r + 1, reps)
    if collect_trials is not None:
        collect_trials(results)
    valid = [t for t in results if t.valid]
    if not valid:
        raise AllTrialsInvalidError(f"all {reps} replications exceeded the bootstrap skip budget")
    r_valid = len(valid)
    coverage, mc_se = {}, {}
    for a in cfg.levels:
        c = sum(t.covered[a] for t in valid) / r_valid
        coverage[a] = c
        mc_se[a] = math.sqrt(c * (1.0 - c) / r_valid)
    return CoverageReport(
        problem=cfg.problem,
        method=cfg.method,
        p=cfg.p if cfg.problem == "ols" else 2,
        n=cfg.n,
        boot_reps=cfg.boot_reps,
        valid_reps=r_valid,
        invalid_trials=reps - r_valid,
        coverage=coverage,
        mc_se=mc_se,
    )


_REPORT_HEADER = "problem,method,p,n,R,B,level,coverage,mc_se,invalid_trials"


def report_to_csv(report: CoverageReport, levels=None) -> str:
    lines = [_REPORT_HEADER]
    for a in levels if levels is not None else sorted(report.coverage):
        c, se = report.row(a)
        lines.append(
            f"{report.problem},{report.method},{report.p},{report.n},"
            f"{report.valid_reps},{report.boot_reps},{a:g},{c:.6f},{se:.6f},{report.invalid_trials}"
        )
    return "\n".join(lines) + "\n"


def trials_to_csv(trials, levels) -> str:
    """Per-replication dump: statistic, thresholds, coverage flags."""
    cols = ["rep", "valid", "skipped", "statistic"]
    for a in levels:
        cols.extend([f"lo_{a:g}", f"hi_{a:g}", f"covered_{a:g}"])
    lines = [",".join(cols)]
    for r, t in enumerate(trials):
        row = [str(r), str(int(t.valid)), str(t.skipped), f"{t.statistic:.12g}"]
        for a in levels:
            lo, hi = t.thresholds[a]
            row.extend([f"{lo:.12g}", f"{hi:.12g}", str(int(t.covered[a]))])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
