import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from genboot.core import Dataset
from genboot.estimators import (
    IsotonicFit,
    OneSidedSupportError,
    SingularDesignError,
    iso_bootstrap_fit,
    maxmin_eval,
    ols_fit,
    pava_fit,
)
from genboot.oracles import isotonic_partition_oracle


class TestOls:
    def test_exact_on_noiseless_data(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 4))
        beta = np.array([1.0, -2.0, 0.5, 3.0])
        fit = ols_fit(x, x @ beta)
        assert_allclose(fit.beta, beta, atol=1e-10)

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(80, 5))
        y = rng.normal(size=80)
        fit = ols_fit(x, y)
        assert_allclose(x.T @ x @ fit.beta, x.T @ y, atol=1e-9)

    def test_duplicate_column_rejected(self):
        rng = np.random.default_rng(2)
        c = rng.normal(size=30)
        x = np.column_stack([c, c, rng.normal(size=30)])
        with pytest.raises(SingularDesignError):
            ols_fit(x, rng.normal(size=30))

    def test_condition_attached(self):
        c = np.arange(1.0, 21.0)
        x = np.column_stack([c, c + 1e-14])
        try:
            ols_fit(x, np.ones(20))
        except SingularDesignError as exc:
            assert exc.condition > 1e12
        else:
            pytest.fail("expected SingularDesignError")

    def test_underdetermined_rejected(self):
        rng = np.random.default_rng(3)
        with pytest.raises(SingularDesignError):
            ols_fit(rng.normal(size=(3, 5)), rng.normal(size=3))

    def test_condition_reported_on_success(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(40, 3))
        fit = ols_fit(x, rng.normal(size=40))
        sv = np.linalg.svd(x, compute_uv=False)
        assert_allclose(fit.condition, sv[0] / sv[-1], rtol=1e-12)


class TestPava:
    def test_classic_example(self):
        fit = pava_fit([1.0, 2.0, 3.0], [2.0, 1.0, 3.0])
        assert_allclose(fit.levels, [1.5, 1.5, 3.0])

    def test_already_monotone_untouched(self):
        fit = pava_fit([1, 2, 3, 4], [1.0, 2.0, 3.0, 4.0])
        assert_allclose(fit.levels, [1.0, 2.0, 3.0, 4.0])

    def test_all_decreasing_pools_to_mean(self):
        fit = pava_fit([0, 1, 2, 3], [4.0, 3.0, 2.0, 1.0])
        assert_allclose(fit.levels, [2.5, 2.5, 2.5, 2.5])

    def test_ties_pooled_first(self):
        # duplicate x=1 pools to mean 1.5 with weight 2
        fit = pava_fit([1.0, 1.0, 2.0], [1.0, 2.0, 0.0])
        assert_allclose(fit.knots, [1.0, 2.0])
        assert_allclose(fit.levels, [1.0, 1.0])

    def test_input_order_irrelevant(self):
        x = [3.0, 1.0, 2.0]
        y = [3.0, 2.0, 1.0]
        a = pava_fit(x, y)
        b = pava_fit(sorted(x), [2.0, 1.0, 3.0])
        assert_array_equal(a.knots, b.knots)
        assert_allclose(np.asarray(a.levels, dtype=float), np.asarray(b.levels, dtype=float))

    def test_levels_monotone_and_mean_preserving(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = rng.integers(1, 40)
            x = rng.random(n)
            y = rng.normal(size=n)
            fit = pava_fit(x, y)
            lv = np.asarray(fit.levels, dtype=float)
            assert np.all(np.diff(lv) >= -1e-12)
            # projection preserves the (weighted) mean
            assert abs(lv.mean() * 0 + np.sum(lv * np.unique(x, return_counts=True)[1]) - y.sum()) < 1e-8

    def test_fraction_arithmetic_stays_exact(self):
        x = [Fraction(i) for i in range(4)]
        y = [Fraction(3), Fraction(1), Fraction(2), Fraction(0)]
        fit = pava_fit(x, y)
        assert fit.levels[0] == Fraction(3, 2)
        assert isinstance(fit.levels[0], Fraction)

    def test_single_point(self):
        fit = pava_fit([0.5], [2.0])
        assert fit.evaluate(0.1) == 2.0 and fit.evaluate(0.9) == 2.0


class TestIsotonicFit:
    def test_step_evaluation(self):
        fit = IsotonicFit(knots=np.array([0.0, 1.0, 2.0]), levels=np.array([1.0, 2.0, 3.0]))
        assert fit.evaluate(-5.0) == 1.0  # left extension
        assert fit.evaluate(0.0) == 1.0
        assert fit.evaluate(0.99) == 1.0
        assert fit.evaluate(1.0) == 2.0  # right continuous
        assert fit.evaluate(10.0) == 3.0

    def test_vector_evaluation(self):
        fit = IsotonicFit(knots=np.array([0.0, 1.0]), levels=np.array([0.0, 5.0]))
        assert_array_equal(fit.evaluate(np.array([-1.0, 0.5, 1.5])), [0.0, 0.0, 5.0])

    def test_csv(self, tmp_path):
        fit = pava_fit([0.0, 1.0], [1.0, 0.0])
        path = tmp_path / "fit.csv"
        fit.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "knot,level"
        assert len(lines) == 3


def _maxmin_reference(x, y, x0):
    return maxmin_eval(x, y, x0)


class TestMaxMinIdentity:
    def test_small_example(self):
        assert _maxmin_reference([1, 2, 3], [2.0, 1.0, 3.0], 2.0) == 1.5

    def test_pava_equals_maxmin_exact(self):
        # the isotonic LSE at a data point equals the max-min window average;
        # Fractions keep both sides exact so equality is literal
        rnd = random.Random(314)
        for _ in range(1000):
            n = rnd.randint(1, 12)
            xs = [Fraction(rnd.randint(0, 8)) for _ in range(n)]
            ys = [Fraction(rnd.randint(-6, 6)) for _ in range(n)]
            fit = pava_fit(xs, ys)
            x0 = rnd.choice(xs)
            assert fit.evaluate(x0) == maxmin_eval(xs, ys, x0)


class TestPartitionOracle:
    @settings(max_examples=120, deadline=None)
    @given(
        st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=8),
    )
    def test_pava_matches_enumeration(self, ys):
        xs = list(range(len(ys)))
        ys_f = [Fraction(v) for v in ys]
        fit = pava_fit(xs, ys_f)
        oracle_levels = isotonic_partition_oracle(ys_f)
        assert list(fit.levels) == list(oracle_levels)

    def test_oracle_agrees_on_floats(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            ys = rng.normal(size=rng.integers(1, 8)).tolist()
            fit = pava_fit(list(range(len(ys))), ys)
            assert_allclose(
                np.asarray(fit.levels, dtype=float),
                np.asarray(isotonic_partition_oracle(ys), dtype=float),
                atol=1e-12,
            )


class TestIsoBootstrapFit:
    def test_three_point_projection(self):
        # y = (0.4, 0.1, 0.3) at x = (0.2, 0.5, 0.8): PAVA pools the first two
        data = Dataset(np.array([[0.2, 0.4], [0.5, 0.1], [0.8, 0.3]]))
        val = iso_bootstrap_fit(data, (0.0, 1.0), 0.5)
        assert val == pytest.approx(0.25)

    def test_rows_outside_support_dropped(self):
        base = [[0.2, 0.4], [0.5, 0.1], [0.8, 0.3]]
        noisy = base + [[-3.0, 99.0], [1.7, -99.0]]
        a = iso_bootstrap_fit(Dataset(np.array(noisy)), (0.0, 1.0), 0.5)
        b = iso_bootstrap_fit(Dataset(np.array(base)), (0.0, 1.0), 0.5)
        assert a == b

    def test_no_left_bracket_raises(self):
        data = Dataset(np.array([[0.6, 1.0], [0.9, 2.0]]))
        with pytest.raises(OneSidedSupportError):
            iso_bootstrap_fit(data, (0.0, 1.0), 0.5)

    def test_no_right_bracket_raises(self):
        data = Dataset(np.array([[0.1, 1.0], [0.2, 2.0]]))
        with pytest.raises(OneSidedSupportError):
            iso_bootstrap_fit(data, (0.0, 1.0), 0.5)

    def test_exact_hit_counts_both_sides(self):
        data = Dataset(np.array([[0.5, 1.0]]))
        assert iso_bootstrap_fit(data, (0.0, 1.0), 0.5) == 1.0

    def test_all_rows_filtered_raises(self):
        data = Dataset(np.array([[5.0, 1.0], [6.0, 2.0]]))
        with pytest.raises(OneSidedSupportError):
            iso_bootstrap_fit(data, (0.0, 1.0), 0.5)

    def test_needs_two_columns(self):
        data = Dataset(np.ones((4, 3)))
        with pytest.raises(ValueError):
            iso_bootstrap_fit(data, (0.0, 1.0), 0.5)
