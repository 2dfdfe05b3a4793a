import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from chase_escape.stats import (
    KS_C_001,
    EmpiricalSummary,
    chi_square_gof,
    empirical_pmf,
    kolmogorov_c,
    ks_critical_value,
    ks_one_sample,
    ks_two_sample,
    loglog_slope,
    mean_ci,
    tv_distance_discrete,
)


def uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


class TestSummary:
    def test_fields(self):
        s = EmpiricalSummary.from_sample([3.0, 1.0, 2.0])
        assert list(s.sorted_sample) == [1.0, 2.0, 3.0]
        assert s.mean == 2.0 and s.variance == 1.0 and s.count == 3

    def test_empty(self):
        with pytest.raises(ValueError):
            EmpiricalSummary.from_sample([])


class TestKS:
    def test_single_point(self):
        assert ks_one_sample([0.5], uniform_cdf) == 0.5

    @pytest.mark.parametrize("n", [1, 7, 1000])
    def test_quantile_sample(self, n):
        x = (np.arange(1, n + 1) - 0.5) / n
        assert ks_one_sample(x, uniform_cdf) == pytest.approx(1 / (2 * n))

    def test_matches_scipy_continuous(self):
        x = np.random.default_rng(0).standard_normal(500)
        assert ks_one_sample(x, sps.norm.cdf) == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)

    def test_atoms_with_left_limits(self):
        # a sample sitting exactly on a Bernoulli(1/2) law
        x = np.array([0.0] * 50 + [1.0] * 50)
        cdf = lambda v: np.where(np.asarray(v) < 0, 0.0, np.where(np.asarray(v) < 1, 0.5, 1.0))  # noqa: E731
        left = lambda v: np.where(np.asarray(v) <= 0, 0.0, np.where(np.asarray(v) <= 1, 0.5, 1.0))  # noqa: E731
        assert ks_one_sample(x, cdf, left) == 0.0
        assert ks_one_sample(x, cdf) == 0.5  # the continuous formula is wrong here

    def test_two_sample_examples(self):
        assert ks_two_sample([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert ks_two_sample([0.0], [1.0]) == 1.0
        assert ks_two_sample([0, 2], [1, 3]) == 0.5

    def test_two_sample_matches_scipy(self):
        rng = np.random.default_rng(1)
        a, b = rng.integers(0, 20, 300), rng.integers(0, 22, 450)
        assert ks_two_sample(a, b) == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-14)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
           st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
    def test_two_sample_symmetric_and_bounded(self, a, b):
        d = ks_two_sample(a, b)
        assert d == ks_two_sample(b, a)
        assert 0.0 <= d <= 1.0

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=40))
    def test_one_sample_bounded(self, x):
        d = ks_one_sample(x, sps.norm.cdf)
        assert 0.0 <= d <= 1.0

    def test_critical_values(self):
        assert ks_critical_value(10_000, 10_000) == pytest.approx(0.0231, abs=1e-4)
        assert ks_critical_value(100_000) == pytest.approx(0.0052, abs=1e-4)
        assert kolmogorov_c(0.01) == pytest.approx(KS_C_001, abs=1e-3)
        with pytest.raises(ValueError):
            kolmogorov_c(0.0)

    def test_null_rejection_rate(self):
        # about 1% of uniform samples exceed the 1% critical value
        rng = np.random.default_rng(2)
        n, reps = 400, 3000
        crit = ks_critical_value(n)
        rate = np.mean([ks_one_sample(rng.random(n), uniform_cdf) > crit for _ in range(reps)])
        assert rate < 0.02


class TestTV:
    def test_examples(self):
        assert tv_distance_discrete({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0.0
        assert tv_distance_discrete({0: 1.0}, {1: 1.0}) == 1.0
        assert tv_distance_discrete({0: 0.5, 1: 0.5}, {0: 0.25, 1: 0.75}) == 0.25

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            tv_distance_discrete({0: 0.5}, {0: 1.0})

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_triangle(self, seed):
        rng = np.random.default_rng(seed)
        p, q, r = (dict(enumerate(rng.dirichlet(np.ones(6)))) for _ in range(3))
        assert tv_distance_discrete(p, r) <= tv_distance_discrete(p, q) + tv_distance_discrete(q, r) + 1e-12

    def test_empirical_pmf(self):
        assert empirical_pmf([(1, 2), (1, 2), (3, 4), (5, 6)]) == {(1, 2): 0.5, (3, 4): 0.25, (5, 6): 0.25}


class TestChiSquare:
    def test_examples(self):
        res = chi_square_gof([60, 40], [0.5, 0.5], 100)
        assert res.statistic == pytest.approx(4.0) and res.dof == 1
        assert chi_square_gof([25, 25, 50], [0.25, 0.25, 0.5], 100).statistic == 0.0

    def test_pools_small_cells(self):
        # expected counts 2 and 1 at the tail pool into the 15-cell: cells 50, 30, 18
        res = chi_square_gof([50, 30, 15, 3, 2], [0.5, 0.3, 0.15, 0.02, 0.01], 100)
        assert res.dof == 2
        assert res.statistic == pytest.approx(0.0, abs=1e-12)
        # uncovered mass becomes its own cell when big enough
        res = chi_square_gof([50, 30], [0.5, 0.3], 100)
        assert res.dof == 2

    def test_p_value_matches_scipy(self):
        obs = [48, 35, 17]
        res = chi_square_gof(obs, [0.5, 0.3, 0.2], 100)
        ref = sps.chisquare(obs, [50, 30, 20])
        assert res.statistic == pytest.approx(ref.statistic)
        assert res.p_value == pytest.approx(ref.pvalue)

    def test_rejects(self):
        with pytest.raises(ValueError):
            chi_square_gof([1, 2], [0.5, 0.0], 3)
        with pytest.raises(ValueError):
            chi_square_gof([1, 1], [0.5, 0.5], 2)


class TestMeanCI:
    def test_constant(self):
        assert mean_ci([2.0, 2.0, 2.0], 3.0) == (2.0, 2.0)

    def test_zero_z(self):
        lo, hi = mean_ci([1.0, 2.0, 6.0], 0.0)
        assert lo == hi == 3.0

    def test_needs_two(self):
        with pytest.raises(ValueError):
            mean_ci([1.0])

    def test_coverage(self):
        rng = np.random.default_rng(3)
        hits = 0
        runs = 300
        for _ in range(runs):
            lo, hi = mean_ci(rng.standard_exponential(10_000), 3.0)
            hits += lo <= 1.0 <= hi
        assert hits / runs >= 0.98


def test_loglog_slope():
    x = np.array([10.0, 100.0, 1000.0])
    assert loglog_slope(x, 3 * x**0.57) == pytest.approx(0.57)
    with pytest.raises(ValueError):
        loglog_slope([1.0], [1.0])
    with pytest.raises(ValueError):
        loglog_slope([1.0, 2.0], [0.0, 1.0])
