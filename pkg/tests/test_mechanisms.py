import numpy as np
import pytest

from unsurecrowd import crowd, mechanisms as mech
from unsurecrowd.aggregation import LabelRecord, exact_error_prob
from unsurecrowd.errors import ConfigError, DomainError


def rng_for(seed=0):
    return np.random.default_rng(np.random.SeedSequence(seed))


class TestDecideAction:
    def test_unsure_boundary_inclusive(self):
        m = mech.UnsureFixed(0.7)
        assert mech.decide_action(m, crowd.WorkerDraw(0.5, 0.8)) is mech.Action.RETURN_LABEL
        assert mech.decide_action(m, crowd.WorkerDraw(0.5, 0.7)) is mech.Action.RETURN_LABEL
        assert mech.decide_action(m, crowd.WorkerDraw(0.5, 0.69)) is mech.Action.UNSURE

    def test_quality_gates_on_ability(self):
        m = mech.QualityEnsured(0.8)
        assert mech.decide_action(m, crowd.WorkerDraw(0.79, 1.0)) is mech.Action.REJECT
        assert mech.decide_action(m, crowd.WorkerDraw(0.8, 0.5)) is mech.Action.RETURN_LABEL

    def test_simple_always_labels(self):
        assert mech.decide_action(mech.Simple(), crowd.WorkerDraw(0.1, 0.5)) is mech.Action.RETURN_LABEL

    def test_online_config_routed_elsewhere(self):
        m = mech.UnsureOnline((0.55, 0.6))
        with pytest.raises(ConfigError):
            mech.decide_action(m, crowd.WorkerDraw(0.9, 0.9))

    def test_threshold_validation(self):
        with pytest.raises(ConfigError):
            mech.UnsureFixed(0.5)
        with pytest.raises(ConfigError):
            mech.QualityEnsured(1.1)
        with pytest.raises(ConfigError):
            mech.UnsureOnline((0.6, 0.55))


class TestSettlePayments:
    def test_flat_counts_unsure(self):
        labels = [LabelRecord(1, 0.9), LabelRecord(1, 0.9), LabelRecord(-1, 0.6)]
        settled = mech.settle_payments(mech.Flat(1.0), labels, 1, 1)
        assert settled.total == pytest.approx(4.0)

    def test_incentive_agreement_rule(self):
        labels = [LabelRecord(1, 0.9), LabelRecord(1, 0.8), LabelRecord(-1, 0.6)]
        settled = mech.settle_payments(mech.IncentiveCompatible(0.7), labels, 1, 1)
        assert settled.label_payments == (1.0, 1.0, 0.0)
        assert settled.unsure_payment == pytest.approx(0.7)
        assert settled.total == pytest.approx(2.7)

    def test_incentive_unsure_only(self):
        settled = mech.settle_payments(mech.IncentiveCompatible(0.7), [], 2, 1)
        assert settled.total == pytest.approx(1.4)


class TestRunTask:
    def test_simple_flat_accounting(self):
        res = mech.run_task(mech.Simple(), mech.Flat(1.0), crowd.Beta(2.2, 2.0), crowd.Folded(),
                            crowd.GoldenTestConfig(0), mech.FixedWorkers(5), 1, rng_for(1))
        assert res.workers_consumed == 5
        assert res.total_payment == pytest.approx(5.0)
        assert len(res.labels) == 5

    def test_all_unsure_defaults_to_plus_one(self):
        res = mech.run_task(mech.UnsureFixed(0.95), mech.Flat(), crowd.PointMass(0.6),
                            crowd.Folded(), crowd.GoldenTestConfig(0), mech.FixedWorkers(4),
                            -1, rng_for(2))
        assert res.unsure_count == 4
        assert len(res.labels) == 0
        assert res.estimate == 1

    def test_point_mass_unsure_returns_labels(self):
        res = mech.run_task(mech.UnsureFixed(0.75), mech.Flat(), crowd.PointMass(0.9),
                            crowd.Folded(), crowd.GoldenTestConfig(0),
                            mech.FixedReturnedLabels(3), 1, rng_for(3))
        assert res.unsure_count == 0
        assert len(res.labels) == 3

    def test_accuracy_matches_enumeration_oracle(self):
        # PointMass(0.9) votes of 3: error rate must match the exact enumeration
        rng = rng_for(4)
        expected_err = exact_error_prob([0.9] * 3).truth_plus
        n = 20_000
        errors = 0
        for _ in range(n):
            res = mech.run_task(mech.UnsureFixed(0.75), mech.Flat(), crowd.PointMass(0.9),
                                crowd.Folded(), crowd.GoldenTestConfig(0),
                                mech.FixedReturnedLabels(3), 1, rng)
            errors += res.estimate != res.truth
        se = np.sqrt(expected_err * (1 - expected_err) / n)
        assert abs(errors / n - expected_err) < 4 * se

    def test_accounting_identity_fuzz(self):
        rng = rng_for(5)
        specs = [crowd.Beta(2.2, 2.0), crowd.Beta(1.1, 1.0), crowd.PointMass(0.7)]
        links = [crowd.Folded(), crowd.IdentityClamped(), crowd.NoisyFolded(0.1)]
        mechs = [mech.Simple(), mech.QualityEnsured(0.7), mech.UnsureFixed(0.65)]
        for i in range(40):
            m = mechs[i % 3]
            pay = mech.Flat(1.0) if i % 2 else (
                mech.IncentiveCompatible(getattr(m, "T", 0.65)) if not isinstance(m, mech.Simple)
                else mech.Flat(2.0))
            stop = [mech.FixedWorkers(8), mech.FixedReturnedLabels(4), mech.FixedBudget(6.0)][i % 3]
            res = mech.run_task(m, pay, specs[i % 3], links[(i // 3) % 3],
                                crowd.GoldenTestConfig(i % 3), stop, 1 if i % 2 else -1, rng)
            assert res.workers_consumed == len(res.labels) + res.unsure_count + res.rejected_count
            settled = mech.settle_payments(pay, res.labels, res.unsure_count, res.estimate)
            assert res.total_payment == pytest.approx(settled.total)

    def test_flat_unit_payment_equals_workers_without_rejections(self):
        res = mech.run_task(mech.UnsureFixed(0.8), mech.Flat(1.0), crowd.Beta(2.2, 2.0),
                            crowd.Folded(), crowd.GoldenTestConfig(0), mech.FixedWorkers(30),
                            1, rng_for(6))
        assert res.total_payment == pytest.approx(res.workers_consumed)

    def test_identity_link_degenerates_to_quality_ensured(self):
        # same seed => same worker stream; the two mechanisms must accept identical labels
        common = dict(spec=crowd.Beta(2.2, 2.0), link=crowd.IdentityClamped(),
                      test=crowd.GoldenTestConfig(0), stop=mech.FixedWorkers(50), truth=1)
        res_u = mech.run_task(mech.UnsureFixed(0.75), mech.Flat(), common["spec"], common["link"],
                              common["test"], common["stop"], common["truth"], rng_for(7))
        res_q = mech.run_task(mech.QualityEnsured(0.75), mech.Flat(), common["spec"], common["link"],
                              common["test"], common["stop"], common["truth"], rng_for(7))
        assert [r.value for r in res_u.labels] == [r.value for r in res_q.labels]
        assert all(r.worker_ability >= 0.75 for r in res_u.labels)
        assert res_u.unsure_count == res_q.rejected_count

    def test_determinism(self):
        args = (mech.UnsureFixed(0.7), mech.Flat(), crowd.Beta(1.1, 1.0), crowd.Folded(),
                crowd.GoldenTestConfig(1), mech.FixedReturnedLabels(9), -1)
        assert mech.run_task(*args, rng_for(8)) == mech.run_task(*args, rng_for(8))

    def test_budget_stop(self):
        res = mech.run_task(mech.Simple(), mech.Flat(1.0), crowd.Beta(2.2, 2.0), crowd.Folded(),
                            crowd.GoldenTestConfig(0), mech.FixedBudget(7.0), 1, rng_for(9))
        assert res.total_payment <= 7.0
        assert res.workers_consumed == 7

    def test_budget_below_one_payment_rejected(self):
        with pytest.raises(ConfigError):
            mech.run_task(mech.Simple(), mech.Flat(1.0), crowd.Beta(2.2, 2.0), crowd.Folded(),
                          crowd.GoldenTestConfig(0), mech.FixedBudget(0.5), 1, rng_for(10))

    def test_unreachable_label_quota_raises(self):
        # confidence is always 0.6 < 0.95, so no label ever returns
        with pytest.raises(ConfigError, match="unreachable"):
            mech.run_task(mech.UnsureFixed(0.95), mech.Flat(), crowd.PointMass(0.6),
                          crowd.Folded(), crowd.GoldenTestConfig(0),
                          mech.FixedReturnedLabels(1), 1, rng_for(11))

    def test_low_mean_crowd_rejected(self):
        with pytest.raises(DomainError):
            mech.run_task(mech.Simple(), mech.Flat(), crowd.PointMass(0.4), crowd.Folded(),
                          crowd.GoldenTestConfig(0), mech.FixedWorkers(3), 1, rng_for(12))


class TestIncentives:
    def test_confident_worker_labels(self):
        rep = mech.incentive_best_action(0.8, 0.7)
        assert rep.action is mech.Action.RETURN_LABEL
        assert (rep.expected_label_payment, rep.unsure_payment) == (0.8, 0.7)

    def test_unsure_worker_abstains(self):
        rep = mech.incentive_best_action(0.6, 0.7)
        assert rep.action is mech.Action.UNSURE

    def test_tie_returns_label(self):
        rep = mech.incentive_best_action(0.7, 0.7)
        assert rep.action is mech.Action.RETURN_LABEL
        assert rep.expected_label_payment == rep.unsure_payment

    def test_honesty_dominates_on_grid(self):
        grid = [round(0.51 + 0.01 * i, 2) for i in range(49)]
        for c in grid:
            for t in grid:
                rep = mech.incentive_best_action(c, t)
                chosen = rep.expected_label_payment if rep.action is mech.Action.RETURN_LABEL \
                    else rep.unsure_payment
                other = rep.unsure_payment if rep.action is mech.Action.RETURN_LABEL \
                    else rep.expected_label_payment
                assert chosen >= other
                if c != t:
                    assert chosen > other
