import math

import numpy as np
import pytest

from genboot.core import RngStream
from genboot.generators import GanConfig
from genboot.inference import (
    REPLICATION_BLOCK,
    AllTrialsInvalidError,
    CoverageReport,
    TrialConfig,
    TrialResult,
    iso_trial,
    ols_trial,
    order_quantile,
    report_to_csv,
    run_coverage,
    run_trial,
    trials_to_csv,
)
from genboot.inference import _window_center


class TestOrderQuantile:
    def test_small_sample_rank(self):
        vals = list(range(1, 11))
        assert order_quantile(vals, 0.5) == 5.0
        assert order_quantile(vals, 0.9) == 9.0
        assert order_quantile(vals, 0.95) == 10.0
        assert order_quantile(vals, 1.0) == 10.0
        assert order_quantile(vals, 1e-9) == 1.0

    def test_exact_integer_alpha_b_not_bumped(self):
        # 0.9 * 300 = 270.00000000000003 in floats; ceil must not give 271
        vals = np.arange(1.0, 301.0)
        assert order_quantile(vals, 0.9) == 270.0

    def test_order_free(self):
        rng = np.random.default_rng(5)
        vals = rng.permutation(np.arange(1.0, 51.0))
        assert order_quantile(vals, 0.5) == 25.0

    def test_rejects_empty_and_bad_alpha(self):
        with pytest.raises(ValueError):
            order_quantile([], 0.5)
        with pytest.raises(ValueError):
            order_quantile([1.0], 0.0)
        with pytest.raises(ValueError):
            order_quantile([1.0], 1.1)


class TestTrialConfig:
    def test_defaults(self):
        cfg = TrialConfig(problem="iso", method="empirical", n=100)
        assert cfg.boot_reps == 1000
        assert cfg.center_draws == 50000
        assert cfg.levels == (0.90, 0.95)
        assert cfg.skip_budget == 0.10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"problem": "anova"},
            {"method": "jackknife"},
            {"n": 0},
            {"problem": "ols", "p": 6},
            {"boot_reps": 9},
            {"boot_reps": REPLICATION_BLOCK},
            {"center_draws": 5},
            {"levels": ()},
            {"levels": (0.9, 1.0)},
            {"skip_budget": 1.0},
            {"skip_budget": -0.1},
        ],
    )
    def test_rejects_bad_fields(self, kwargs):
        base = dict(problem="iso", method="empirical", n=100)
        base.update(kwargs)
        with pytest.raises(ValueError):
            TrialConfig(**base)

    def test_frozen(self):
        cfg = TrialConfig(problem="iso", method="empirical", n=100)
        with pytest.raises(AttributeError):
            cfg.n = 200


class TestWindowCenter:
    def test_tight_cluster_uses_small_window(self):
        xs = np.full(12, 0.5) + np.linspace(-5e-5, 5e-5, 12)
        ys = np.linspace(1.0, 2.0, 12)
        v = np.column_stack([xs, ys])
        assert _window_center(v, 0.5) == pytest.approx(ys.mean())

    def test_doubles_until_ten_points(self):
        # nothing within 1e-4 of 0.5: the window must widen to reach the
        # clusters at 0.4 and 0.6
        xs = np.concatenate([np.full(6, 0.4), np.full(6, 0.6)])
        ys = np.concatenate([np.full(6, 1.0), np.full(6, 3.0)])
        v = np.column_stack([xs, ys])
        assert _window_center(v, 0.5) == pytest.approx(2.0)

    def test_never_enough_points_raises(self):
        v = np.array([[0.5, 1.0], [0.51, 2.0]])
        with pytest.raises(AllTrialsInvalidError):
            _window_center(v, 0.5)


OLS_CFG = TrialConfig(problem="ols", method="empirical", n=60, p=8, boot_reps=30, seed=11)
ISO_CFG = TrialConfig(problem="iso", method="empirical", n=50, boot_reps=30, seed=12)


class TestOlsTrial:
    def test_deterministic_replay(self):
        a = run_trial(OLS_CFG, 3)
        b = run_trial(OLS_CFG, 3)
        assert a == b

    def test_run_trial_matches_direct_call(self):
        direct = ols_trial(OLS_CFG, RngStream(OLS_CFG.seed, 3 * REPLICATION_BLOCK))
        assert run_trial(OLS_CFG, 3) == direct

    def test_covered_consistent_with_thresholds(self):
        t = run_trial(OLS_CFG, 0)
        assert t.valid
        for a, (lo, hi) in t.thresholds.items():
            assert lo == float("-inf")
            assert t.covered[a] == (lo <= t.statistic <= hi)

    def test_statistic_nonnegative(self):
        t = run_trial(OLS_CFG, 1)
        assert t.statistic >= 0.0
        assert t.skipped == 0

    def test_wrong_problem_rejected(self):
        with pytest.raises(ValueError):
            ols_trial(ISO_CFG, RngStream(0, 0))


class TestIsoTrial:
    def test_equal_tailed_thresholds(self):
        t = run_trial(ISO_CFG, 0)
        assert t.valid
        for a, (lo, hi) in t.thresholds.items():
            assert math.isfinite(lo) and math.isfinite(hi)
            assert lo <= hi
            assert t.covered[a] == (lo <= t.statistic <= hi)

    def test_nested_levels_nest(self):
        t = run_trial(ISO_CFG, 2)
        lo90, hi90 = t.thresholds[0.90]
        lo95, hi95 = t.thresholds[0.95]
        assert lo95 <= lo90 and hi90 <= hi95

    def test_deterministic_replay(self):
        assert run_trial(ISO_CFG, 5) == run_trial(ISO_CFG, 5)

    def test_wrong_problem_rejected(self):
        with pytest.raises(ValueError):
            iso_trial(OLS_CFG, RngStream(0, 0))

    def test_skips_counted_within_budget(self):
        # n=3 resamples often miss one side of x0; seed chosen so some do
        cfg = TrialConfig(problem="iso", method="empirical", n=3, boot_reps=30,
                          skip_budget=0.5, seed=0)
        t = run_trial(cfg, 0)
        assert t.valid
        assert 0 < t.skipped <= 15

    def test_budget_exceeded_marks_invalid(self):
        cfg = TrialConfig(problem="iso", method="empirical", n=3, boot_reps=10,
                          skip_budget=0.0, seed=0)
        t = run_trial(cfg, 0)
        assert not t.valid
        assert t.skipped > 0
        assert all(not c for c in t.covered.values())
        assert all(math.isnan(lo) and math.isnan(hi) for lo, hi in t.thresholds.values())

    def test_untrained_gan_iso_all_replicates_skip(self):
        # gen_steps=0 leaves the generator at its tiny initialization:
        # synthetic draws hug 0, never bracket x0=0.5, every replicate is
        # dropped and the trial comes back invalid, deterministically
        cfg = TrialConfig(problem="iso", method="gan", n=40, boot_reps=15,
                          center_draws=1500, skip_budget=0.9, seed=7,
                          gan=GanConfig(gen_steps=0))
        a, b = run_trial(cfg, 0), run_trial(cfg, 0)
        assert not a.valid and a.skipped == 15
        assert all(math.isnan(lo) and math.isnan(hi) for lo, hi in a.thresholds.values())
        assert (a.covered, a.statistic, a.valid, a.skipped) == \
            (b.covered, b.statistic, b.valid, b.skipped)

    def test_untrained_gan_ols_trial_round_trips(self):
        # conditioning is scale-invariant, so OLS on the untrained
        # generator's near-zero draws stays well-posed: a valid trial with
        # enormous thresholds, identical on replay
        cfg = TrialConfig(problem="ols", method="gan", n=60, p=8, boot_reps=15,
                          center_draws=1500, seed=7, gan=GanConfig(gen_steps=0))
        t = run_trial(cfg, 0)
        assert t == run_trial(cfg, 0)
        assert t.valid
        for a, (lo, hi) in t.thresholds.items():
            assert t.covered[a] == (lo <= t.statistic <= hi)


class TestRunCoverage:
    def test_worker_count_invariance(self):
        grabbed = {}
        r1 = run_coverage(ISO_CFG, 6, workers=1, collect_trials=lambda t: grabbed.update(w1=t))
        r2 = run_coverage(ISO_CFG, 6, workers=2, collect_trials=lambda t: grabbed.update(w2=t))
        assert report_to_csv(r1) == report_to_csv(r2)
        assert grabbed["w1"] == grabbed["w2"]
        assert trials_to_csv(grabbed["w1"], ISO_CFG.levels) == trials_to_csv(
            grabbed["w2"], ISO_CFG.levels
        )

    def test_aggregation_matches_trials(self):
        trials = {}
        rep = run_coverage(OLS_CFG, 5, collect_trials=lambda t: trials.update(t=t))
        got = trials["t"]
        assert rep.valid_reps == sum(t.valid for t in got)
        assert rep.invalid_trials == 5 - rep.valid_reps
        for a in OLS_CFG.levels:
            c = sum(t.covered[a] for t in got if t.valid) / rep.valid_reps
            assert rep.coverage[a] == pytest.approx(c)
            assert rep.mc_se[a] == pytest.approx(math.sqrt(c * (1 - c) / rep.valid_reps))

    def test_progress_callback_sees_every_rep(self):
        seen = []
        run_coverage(ISO_CFG, 4, progress=lambda done, total: seen.append((done, total)))
        assert seen == [(1, 4), (2, 4), (3, 4), (4, 4)]

    def test_all_invalid_raises(self):
        cfg = TrialConfig(problem="iso", method="empirical", n=3, boot_reps=10,
                          skip_budget=0.0, seed=0)
        with pytest.raises(AllTrialsInvalidError):
            run_coverage(cfg, 1)

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            run_coverage(ISO_CFG, 0)
        with pytest.raises(ValueError):
            run_coverage(ISO_CFG, 2, workers=0)


class TestCsvShapes:
    def test_report_golden_row(self):
        rep = CoverageReport(
            problem="ols", method="flow", p=24, n=500, boot_reps=300,
            valid_reps=100, invalid_trials=2,
            coverage={0.9: 0.5}, mc_se={0.9: 0.05},
        )
        assert report_to_csv(rep) == (
            "problem,method,p,n,R,B,level,coverage,mc_se,invalid_trials\n"
            "ols,flow,24,500,100,300,0.9,0.500000,0.050000,2\n"
        )

    def test_report_orders_levels(self):
        rep = CoverageReport(
            problem="iso", method="empirical", p=2, n=100, boot_reps=50,
            valid_reps=10, invalid_trials=0,
            coverage={0.95: 1.0, 0.9: 0.8}, mc_se={0.95: 0.0, 0.9: 0.1265},
        )
        lines = report_to_csv(rep).strip().split("\n")
        assert lines[1].split(",")[6] == "0.9"
        assert lines[2].split(",")[6] == "0.95"

    def test_trials_golden_row(self):
        t = TrialResult(
            covered={0.9: True},
            statistic=1.5,
            thresholds={0.9: (float("-inf"), 2.0)},
            valid=True,
            skipped=1,
        )
        assert trials_to_csv([t], (0.9,)) == (
            "rep,valid,skipped,statistic,lo_0.9,hi_0.9,covered_0.9\n"
            "0,1,1,1.5,-inf,2,1\n"
        )

    def test_trials_csv_parses_back(self):
        trials = {}
        run_coverage(ISO_CFG, 3, collect_trials=lambda t: trials.update(t=t))
        text = trials_to_csv(trials["t"], ISO_CFG.levels)
        lines = text.strip().split("\n")
        assert len(lines) == 4
        header = lines[0].split(",")
        assert header[:4] == ["rep", "valid", "skipped", "statistic"]
        for i, line in enumerate(lines[1:]):
            cells = line.split(",")
            assert cells[0] == str(i)
            float(cells[3])
