import math

import numpy as np
import pytest
from scipy.special import logsumexp

from boostlab.adaboost import (
    BoostFailure,
    BoostSuccess,
    SnapshotPolicy,
    VotingClassifier,
    check_z_decay,
    exponential_loss,
    learning_rate,
    min_margin,
    run_adaboost,
    update_distribution,
)
from boostlab.core import (
    Hypothesis,
    LabeledDomain,
    TrainingSet,
    WeightDistribution,
    empirical_loss,
)
from boostlab.datasets import diagonal_task
from boostlab.errors import InvalidInputError
from boostlab.weak_learners import QueryLedger, StumpOracle, WeakLearnerOracle

from conftest import random_dense, random_domain


class ScriptedOracle(WeakLearnerOracle):
    """Returns a fixed sequence of hypotheses, repeating the last one."""

    def __init__(self, answers):
        super().__init__()
        self.answers = list(answers)
        self._i = 0

    def _answer(self, dist):
        answer = self.answers[min(self._i, len(self.answers) - 1)]
        self._i += 1
        return answer


class OrientedRandomOracle(WeakLearnerOracle):
    """Random dense hypothesis flipped to whichever polarity beats 1/2."""

    def __init__(self, domain, rng):
        super().__init__()
        self.domain = domain
        self.rng = rng

    def _answer(self, dist):
        h = random_dense(self.domain, self.rng)
        if empirical_loss(h, dist, self.domain) > 0.5:
            return h.negated()
        return h


class TestLearningRate:
    def test_zero_gamma(self):
        assert learning_rate(0.0) == 0.0

    def test_frozen_values(self):
        # ln((1/2 + gamma/4)/(1/2 - gamma/4))/2 at 50-digit precision
        assert learning_rate(0.4) == pytest.approx(0.20273255405408219, rel=1e-14)
        assert learning_rate(0.5) == pytest.approx(0.25541281188299534, rel=1e-14)

    def test_domain_boundary(self):
        with pytest.raises(InvalidInputError):
            learning_rate(2.0)
        with pytest.raises(InvalidInputError):
            learning_rate(-0.01)

    def test_rate_below_gamma_on_grid(self):
        for gamma in np.linspace(0.0, 0.5, 1000):
            assert learning_rate(float(gamma)) <= gamma + 1e-15


class TestUpdateDistribution:
    def test_concept_leaves_distribution_unchanged(self, rng):
        dom = random_domain(8, rng)
        d = WeightDistribution.normalized(np.arange(dom.size), rng.random(dom.size))
        updated = update_distribution(d, Hypothesis.dense(dom.labels), dom, 0.3)
        np.testing.assert_allclose(updated.weights, d.weights, rtol=1e-12)

    def test_zero_rate_identity(self, rng):
        dom = random_domain(8, rng)
        d = WeightDistribution.uniform(np.arange(dom.size))
        h = random_dense(dom, rng)
        updated = update_distribution(d, h, dom, 0.0)
        np.testing.assert_allclose(updated.weights, d.weights, rtol=1e-15)

    def test_two_point_closed_form(self):
        # e^{-w} and e^{w} normalized, w = 0.2, computed at 50-digit precision
        dom = LabeledDomain(np.array([1, 1], dtype=np.int8), 1)
        h = Hypothesis.dense(np.array([1, -1], dtype=np.int8))  # correct on point 0 only
        d = WeightDistribution.uniform(np.arange(2))
        updated = update_distribution(d, h, dom, 0.2)
        np.testing.assert_allclose(
            updated.weights, [0.401312339887548, 0.598687660112452], rtol=1e-14
        )

    def test_mistakes_gain_relative_weight(self, rng):
        dom = random_domain(16, rng)
        d = WeightDistribution.uniform(np.arange(dom.size))
        h = random_dense(dom, rng)
        mistakes = h.evaluate(dom) != dom.labels
        if mistakes.any() and not mistakes.all():
            updated = update_distribution(d, h, dom, 0.25)
            assert (updated.weights[mistakes] > d.weights[mistakes]).all()
            assert (updated.weights[~mistakes] < d.weights[~mistakes]).all()

    def test_inverse_update_restores(self, rng):
        dom = random_domain(12, rng)
        d = WeightDistribution.normalized(np.arange(dom.size), rng.random(dom.size))
        h = random_dense(dom, rng)
        back = update_distribution(update_distribution(d, h, dom, 0.2), h.negated(), dom, 0.2)
        np.testing.assert_allclose(back.weights, d.weights, atol=1e-9)

    def test_negative_rate_rejected(self, rng):
        dom = random_domain(4, rng)
        d = WeightDistribution.uniform(np.arange(dom.size))
        with pytest.raises(InvalidInputError):
            update_distribution(d, Hypothesis.dense(dom.labels), dom, -0.1)


def run_concept_oracle(domain, training, gamma=0.2, rounds=5, **kw):
    oracle = ScriptedOracle([Hypothesis.dense(domain.labels)])
    return run_adaboost(domain, training, oracle, gamma, rounds, **kw)


class TestExponentialLoss:
    def test_zero_rounds_log_m(self, small_domain, small_training):
        result = run_concept_oracle(small_domain, small_training, rounds=1)
        _, total = exponential_loss(result.trace, small_domain, round_index=0)
        assert total == pytest.approx(math.log(small_training.sample_count), rel=1e-12)

    def test_one_concept_round(self, small_domain, small_training):
        result = run_concept_oracle(small_domain, small_training, gamma=0.3, rounds=1)
        _, total = exponential_loss(result.trace, small_domain)
        expected = math.log(small_training.sample_count) - learning_rate(0.3)
        assert total == pytest.approx(expected, rel=1e-12)

    def test_matches_naive_product_small_scale(self, rng):
        # naive oracle: direct products of exponentials, no log-space
        dom = random_domain(8, rng)
        training = TrainingSet(np.arange(dom.m, dtype=np.int64))
        oracle = OrientedRandomOracle(dom, rng)
        result = run_adaboost(dom, training, oracle, 0.1, 10, accept_gamma=0.0)
        assert isinstance(result, BoostSuccess)
        w = result.trace.rate
        z = np.ones(training.sample_count)
        for rec in result.trace.records:
            votes = rec.hypothesis.at(dom, training.indices).astype(np.float64)
            z *= np.exp(-w * dom.labels[training.indices] * votes)
        points, total = exponential_loss(result.trace, dom)
        np.testing.assert_allclose(points, np.log(z), atol=1e-9)
        assert total == pytest.approx(math.log(z.sum()), abs=1e-9)

    def test_recorded_log_z_matches_recompute(self, rng):
        dom = random_domain(8, rng)
        training = TrainingSet(np.arange(dom.m, dtype=np.int64))
        oracle = OrientedRandomOracle(dom, rng)
        result = run_adaboost(dom, training, oracle, 0.1, 6, accept_gamma=0.0)
        for r in range(1, result.trace.round_count + 1):
            _, total = exponential_loss(result.trace, dom, round_index=r)
            assert total == pytest.approx(result.trace.log_z_sequence()[r], abs=1e-12)


class TestRunAdaboost:
    def test_concept_oracle_full_margin(self, small_domain, small_training):
        result = run_concept_oracle(small_domain, small_training, rounds=4)
        assert isinstance(result, BoostSuccess)
        assert min_margin(result.classifier, small_training, small_domain) == 1.0

    def test_failure_round_reported(self, rng):
        # first two rounds answer the concept (distribution stays uniform),
        # round 2 answers a hypothesis with loss exactly 1/2 on it
        dom = random_domain(8, rng)
        training = TrainingSet(np.arange(dom.m, dtype=np.int64))
        concept = Hypothesis.dense(dom.labels)
        bad = np.array(dom.labels, dtype=np.int8)
        bad[: training.sample_count // 2] *= -1
        oracle = ScriptedOracle([concept, concept, Hypothesis.dense(bad)])
        result = run_adaboost(dom, training, oracle, 0.2, 6)
        assert isinstance(result, BoostFailure)
        assert result.round_index == 2
        assert result.best_loss == pytest.approx(0.5, abs=1e-12)
        assert result.trace.round_count == 2

    def test_declared_failure_is_failure_value(self, small_domain, small_training):
        oracle = ScriptedOracle([None])
        result = run_adaboost(small_domain, small_training, oracle, 0.2, 3)
        assert isinstance(result, BoostFailure)
        assert result.round_index == 0
        assert result.best_loss is None

    def test_margin_bound_on_stump_task(self):
        # realizable 2-d task; gamma calibrated to 4x the observed minimum
        # advantage, K from the 16 ln(m)/gamma^2 formula
        domain, training = diagonal_task(50, seed=3)
        oracle = StumpOracle(domain)
        probe = run_adaboost(domain, training, oracle, 0.5, 200, accept_gamma=0.0)
        assert isinstance(probe, BoostSuccess)
        gamma = 4.0 * min(0.5 - rec.loss for rec in probe.trace.records)
        rounds = math.ceil(16.0 * math.log(training.sample_count) / gamma**2)
        final = run_adaboost(domain, training, StumpOracle(domain), gamma, rounds)
        assert isinstance(final, BoostSuccess)
        assert min_margin(final.classifier, training, domain) >= gamma / 16.0

    def test_ledger_accounting(self, small_domain, small_training):
        ledger = QueryLedger()
        run_concept_oracle(small_domain, small_training, rounds=7, ledger=ledger)
        assert ledger.rounds_used == 7
        assert ledger.total_queries == 7
        assert ledger.per_round_counts() == [1] * 7


class TestZDecay:
    def test_no_violations_on_valid_runs(self, rng):
        domain, training = diagonal_task(60, seed=11)
        result = run_adaboost(domain, training, StumpOracle(domain), 0.3, 120)
        assert isinstance(result, BoostSuccess)
        assert check_z_decay(result.trace) == []

    def test_decay_bound_is_tight_at_threshold(self, rng):
        # a crafted round at loss exactly 1/2 - gamma/4 must still satisfy
        # the bound (it is the maximizer of the decay factor)
        gamma = 0.4
        dom = random_domain(8, rng)
        training = TrainingSet(np.arange(dom.m, dtype=np.int64))
        bad = np.array(dom.labels, dtype=np.int8)
        k = int(round((0.5 - gamma / 4) * training.sample_count))
        bad[:k] *= -1
        oracle = ScriptedOracle([Hypothesis.dense(bad)])
        result = run_adaboost(dom, training, oracle, gamma, 1)
        assert isinstance(result, BoostSuccess)
        assert check_z_decay(result.trace) == []


class TestVotingClassifier:
    def test_votes_are_exact_averages(self, rng):
        dom = random_domain(6, rng)
        voters = tuple(random_dense(dom, rng) for _ in range(4))
        vc = VotingClassifier(voters)
        manual = sum(h.evaluate(dom).astype(int) for h in voters) / 4.0
        np.testing.assert_array_equal(vc.votes(dom), manual)

    def test_sign_zero_resolves_positive(self):
        dom = LabeledDomain(np.array([1, -1], dtype=np.int8), 1)
        h = Hypothesis.dense(np.array([1, 1], dtype=np.int8))
        vc = VotingClassifier((h, h.negated()))
        np.testing.assert_array_equal(vc.predict(dom), [1, 1])

    def test_min_margin_trivial_cases(self, small_domain, small_training):
        concept = Hypothesis.dense(small_domain.labels)
        assert min_margin(VotingClassifier((concept,)), small_training, small_domain) == 1.0
        split = VotingClassifier((concept, concept.negated()))
        assert min_margin(split, small_training, small_domain) == 0.0

    def test_positive_margin_implies_zero_training_error(self, rng):
        domain, training = diagonal_task(40, seed=2)
        result = run_adaboost(domain, training, StumpOracle(domain), 0.3, 60)
        assert isinstance(result, BoostSuccess)
        if min_margin(result.classifier, training, domain) > 0:
            assert result.classifier.error_rate(domain, training.indices) == 0.0


class TestSnapshotPolicies:
    def test_none_policy_keeps_no_snapshots(self, small_domain, small_training):
        result = run_concept_oracle(
            small_domain, small_training, rounds=3,
            snapshot_policy=SnapshotPolicy("none"),
        )
        assert all(s is None for s in result.trace.snapshots)

    def test_window_policy_keeps_trailing_window(self, small_domain, small_training):
        result = run_concept_oracle(
            small_domain, small_training, rounds=6,
            snapshot_policy=SnapshotPolicy("window", 2),
        )
        snaps = result.trace.snapshots
        assert all(s is None for s in snaps[:-3])
        assert all(s is not None for s in snaps[-3:])

    def test_unknown_mode_rejected(self):
        with pytest.raises(InvalidInputError):
            SnapshotPolicy("sometimes")
