import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from unsurecrowd.aggregation import (LabelRecord, accuracy_eval, exact_error_prob,
                                     majority_vote, wilson_interval)
from unsurecrowd.errors import ConfigError

labels_strategy = st.lists(st.sampled_from([-1, 0, 1]), max_size=20)


class TestMajorityVote:
    @pytest.mark.parametrize("labels,expected", [
        ([1, 1, -1], 1),
        ([1, -1], 1),        # tie goes to +1
        ([-1, -1, 0, 1], -1),  # unsure excluded
        ([], 1),
    ])
    def test_examples(self, labels, expected):
        assert majority_vote(labels) == expected

    def test_accepts_label_records(self):
        recs = [LabelRecord(-1, 0.8), LabelRecord(-1, 0.6), LabelRecord(0, 0.5)]
        assert majority_vote(recs) == -1

    @given(labels_strategy)
    def test_permutation_invariance(self, labels):
        assert majority_vote(labels) == majority_vote(list(reversed(labels)))

    @given(labels_strategy)
    def test_flip_antisymmetry_away_from_ties(self, labels):
        if sum(labels) != 0:
            flipped = [-v for v in labels]
            assert majority_vote(flipped) == -majority_vote(labels)

    @given(labels_strategy, st.integers(0, 10))
    def test_zeros_never_change_vote(self, labels, n_zeros):
        assert majority_vote(labels + [0] * n_zeros) == majority_vote(labels)


class TestExactErrorProb:
    def test_homogeneous_06(self):
        ep = exact_error_prob([0.6, 0.6, 0.6])
        assert ep.truth_plus == pytest.approx(0.4**3 + 3 * 0.6 * 0.4**2, abs=1e-12)
        assert ep.average == pytest.approx(0.352, abs=1e-12)

    def test_perfect_workers(self):
        ep = exact_error_prob([1.0, 1.0, 1.0])
        assert ep.truth_plus == 0.0
        assert ep.truth_minus == 0.0

    def test_coin_flip_pair_exposes_tie_rule(self):
        ep = exact_error_prob([0.5, 0.5])
        # truth=+1: only (wrong, wrong) loses; truth=-1: any tie or worse loses
        assert ep.truth_plus == pytest.approx(0.25, abs=1e-12)
        assert ep.truth_minus == pytest.approx(0.75, abs=1e-12)
        assert ep.average == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("theta", [0.55, 0.65, 0.75, 0.85, 0.95])
    @pytest.mark.parametrize("m", [1, 3, 5, 7, 9, 11])
    def test_homogeneous_equals_binomial_tail(self, theta, m):
        ep = exact_error_prob([theta] * m)
        expected = binom.cdf((m - 1) // 2, m, theta)
        assert ep.truth_plus == pytest.approx(expected, abs=1e-10)
        assert ep.truth_minus == pytest.approx(expected, abs=1e-10)  # odd m is symmetric

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(101)
        trials = 100_000
        for _ in range(5):
            m = int(rng.integers(1, 10))
            abilities = rng.uniform(0.0, 1.0, size=m)
            ep = exact_error_prob(abilities)
            correct = rng.random((trials, m)) < abilities
            votes = (2 * correct - 1).sum(axis=1) >= 0
            err_mc = 1.0 - votes.mean()
            se = math.sqrt(max(ep.truth_plus * (1 - ep.truth_plus), 1e-9) / trials)
            assert abs(err_mc - ep.truth_plus) < 4 * se + 1e-6

    def test_refuses_large_m(self):
        with pytest.raises(ConfigError, match="enumeration cap"):
            exact_error_prob([0.6] * 23)

    def test_mismatched_m(self):
        with pytest.raises(ConfigError):
            exact_error_prob([0.6, 0.6], m=3)


class _Task:
    def __init__(self, truth, estimate):
        self.truth = truth
        self.estimate = estimate


class TestAccuracyEval:
    def test_all_correct(self):
        est = accuracy_eval([_Task(1, 1)] * 100)
        assert est.accuracy == 1.0
        assert est.ci_low <= 1.0 <= est.ci_high

    def test_half_correct(self):
        tasks = [_Task(1, 1)] * 50 + [_Task(1, -1)] * 50
        assert accuracy_eval(tasks).accuracy == pytest.approx(0.5)

    def test_interval_shrinks_with_quadruple_count(self):
        small = accuracy_eval([_Task(1, 1)] * 60 + [_Task(1, -1)] * 40)
        big = accuracy_eval([_Task(1, 1)] * 240 + [_Task(1, -1)] * 160)
        ratio = (big.ci_high - big.ci_low) / (small.ci_high - small.ci_low)
        assert 0.4 < ratio < 0.6

    def test_empty_input_rejected(self):
        with pytest.raises(ConfigError):
            accuracy_eval([])


def test_wilson_interval_brackets_proportion():
    lo, hi = wilson_interval(70, 100)
    assert lo < 0.7 < hi
    assert 0.0 <= lo and hi <= 1.0
