import math

import numpy as np
import pytest

from boostlab.adaboost import BoostSuccess, learning_rate, run_adaboost, update_distribution
from boostlab.analysis import (
    RULE_FIRST_COIN,
    RULE_MAJORITY,
    advanced_composition,
    breiman_bound,
    check_trace_divergence,
    coin_game_simulate,
    coin_majority_error,
    eps_approximation_check,
    max_divergence,
)
from boostlab.core import (
    Hypothesis,
    HypothesisClass,
    LabeledDomain,
    TrainingSet,
    WeightDistribution,
    empirical_loss,
)
from boostlab.errors import InvalidInputError, UnsupportedTraceError

from conftest import random_class, random_domain

# (eps, n) -> eps_hat at delta' = 1/4, evaluated at 50-digit precision
COMPOSITION_GRID = {
    (0.02, 1): 0.033706211246843026,
    (0.02, 10): 0.10935102191471754,
    (0.02, 100): 0.37342452451659072,
    (0.02, 1000): 1.4571343396287799,
    (0.05, 1): 0.085819015934570978,
    (0.05, 10): 0.28891243296142795,
    (0.05, 100): 1.088910093037818,
    (0.05, 1000): 5.1963236665353613,
    (0.1, 1): 0.17702801403910431,
    (0.1, 10): 0.63172468762247949,
    (0.1, 100): 2.7168184030718718,
    (0.1, 1000): 15.782629503033081,
    (0.2, 1): 0.37730239609511307,
    (0.2, 10): 1.4959130554140034,
    (0.2, 100): 7.7582736078341877,
    (0.2, 1000): 54.811627022970604,
    (0.5, 1): 1.1569152465077618,
    (0.5, 10): 5.8763752012348001,
    (0.5, 100): 40.761609646583385,
    (0.5, 1000): 350.68832382740567,
}


class TestMaxDivergence:
    def test_identical_distributions(self):
        d = WeightDistribution.uniform(np.arange(6))
        assert max_divergence(d, d) == 0.0

    def test_frozen_two_point(self):
        a = WeightDistribution(np.arange(2), np.array([0.6, 0.4]))
        b = WeightDistribution(np.arange(2), np.array([0.5, 0.5]))
        assert max_divergence(a, b) == pytest.approx(0.18232155679395463, rel=1e-14)

    def test_infinite_on_unshared_mass(self):
        a = WeightDistribution(np.arange(2), np.array([0.5, 0.5]))
        b = WeightDistribution(np.arange(2), np.array([1.0, 0.0]))
        assert max_divergence(a, b) == math.inf
        assert max_divergence(b, a) == math.log(2.0)

    def test_mismatched_index_sets_rejected(self):
        a = WeightDistribution.uniform(np.arange(4))
        b = WeightDistribution.uniform(np.arange(1, 5))
        with pytest.raises(InvalidInputError):
            max_divergence(a, b)

    def test_zero_iff_equal_on_support(self, rng):
        for _ in range(20):
            w = rng.random(10)
            a = WeightDistribution.normalized(np.arange(10), w)
            b = WeightDistribution.normalized(np.arange(10), w + rng.random(10) * 0.5)
            if np.allclose(a.weights, b.weights, atol=1e-13):
                assert max_divergence(a, b) <= 1e-12
            else:
                assert max(max_divergence(a, b), max_divergence(b, a)) > 1e-12

    def test_triangle_inequality(self, rng):
        for _ in range(30):
            dists = [
                WeightDistribution.normalized(np.arange(8), 0.05 + rng.random(8))
                for _ in range(3)
            ]
            a, b, c = dists
            assert max_divergence(a, c) <= (
                max_divergence(a, b) + max_divergence(b, c) + 1e-9
            )


class ConceptOracle:
    pass


class TestTraceDivergence:
    def _run(self, oracle_answers, gamma, rounds, rng):
        from boostlab.weak_learners import WeakLearnerOracle

        dom = random_domain(10, rng)
        training = TrainingSet(np.arange(dom.m, dtype=np.int64))

        class Scripted(WeakLearnerOracle):
            def __init__(self):
                super().__init__()
                self._i = 0

            def _answer(self, dist):
                answer = oracle_answers(dom, self._i)
                self._i += 1
                return answer

        return dom, run_adaboost(dom, training, Scripted(), gamma, rounds, accept_gamma=0.0)

    def test_concept_trace_all_zero(self, rng):
        dom, result = self._run(lambda d, i: Hypothesis.dense(d.labels), 0.3, 5, rng)
        report = check_trace_divergence(result.trace, 0.3, 2)
        assert report.ok
        assert report.max_step_value == 0.0

    def test_single_step_closed_form(self):
        # two-point update with w = 0.2: divergence ln(2 * e^w/(e^w + e^-w))
        dom = LabeledDomain(np.array([1, 1], dtype=np.int8), 1)
        d0 = WeightDistribution.uniform(np.arange(2))
        h = Hypothesis.dense(np.array([1, -1], dtype=np.int8))
        w = 0.2
        d1 = update_distribution(d0, h, dom, w)
        expected = math.log(2.0 * 0.598687660112452)
        assert max_divergence(d1, d0) == pytest.approx(expected, rel=1e-12)
        assert max_divergence(d1, d0) <= 2.0 * w

    def test_adversarial_snapshot_pair_flagged(self, rng):
        # hand-built trace whose second snapshot moves too much
        dom, result = self._run(lambda d, i: Hypothesis.dense(d.labels), 0.1, 2, rng)
        trace = result.trace
        skewed = np.full(dom.m, 1e-3)
        skewed[0] = 1.0
        trace.snapshots[1] = WeightDistribution.normalized(trace.training_indices, skewed)
        report = check_trace_divergence(trace, 0.1, 2)
        assert not report.ok
        assert any("step 0" in v or "step 1" in v for v in report.violations)

    def test_bounds_hold_on_real_run(self, rng):
        from boostlab.datasets import diagonal_task
        from boostlab.weak_learners import StumpOracle

        domain, training = diagonal_task(60, seed=4)
        gamma = 0.3
        result = run_adaboost(domain, training, StumpOracle(domain), gamma, 40)
        assert isinstance(result, BoostSuccess)
        for window in (1, 2, 4):
            report = check_trace_divergence(result.trace, gamma, window)
            assert report.ok, report.violations

    def test_missing_snapshots_unsupported(self, rng):
        from boostlab.adaboost import SnapshotPolicy
        from boostlab.datasets import diagonal_task
        from boostlab.weak_learners import StumpOracle

        domain, training = diagonal_task(30, seed=4)
        result = run_adaboost(
            domain, training, StumpOracle(domain), 0.3, 5,
            snapshot_policy=SnapshotPolicy("none"),
        )
        with pytest.raises(UnsupportedTraceError):
            check_trace_divergence(result.trace, 0.3, 2)


class TestAdvancedComposition:
    def test_zero_eps_passthrough(self):
        result = advanced_composition(0.0, 0.0, 50, 0.25)
        assert result.eps_hat == 0.0
        assert result.delta_hat == 0.25

    def test_high_precision_grid(self):
        for (eps, n), expected in COMPOSITION_GRID.items():
            got = advanced_composition(eps, 0.0, n, 0.25).eps_hat
            assert got == pytest.approx(expected, rel=1e-10)

    def test_monotone_in_eps_and_n(self):
        grid_eps = sorted({k[0] for k in COMPOSITION_GRID})
        grid_n = sorted({k[1] for k in COMPOSITION_GRID})
        for n in grid_n:
            values = [COMPOSITION_GRID[(e, n)] for e in grid_eps]
            assert values == sorted(values)
        for e in grid_eps:
            values = [COMPOSITION_GRID[(e, n)] for n in grid_n]
            assert values == sorted(values)

    def test_monotone_in_inverse_delta_prime(self):
        lo = advanced_composition(0.1, 0.0, 10, 0.5).eps_hat
        hi = advanced_composition(0.1, 0.0, 10, 0.01).eps_hat
        assert hi > lo

    def test_small_eps_estimate(self):
        # for eps = 2*gamma*R <= 1: eps_hat <= 2 n eps^2 + eps sqrt(2 n ln 4)
        for eps in (0.1, 0.3, 0.5, 0.8, 1.0):
            for n in (1, 10, 100, 1000):
                got = advanced_composition(eps, 0.0, n, 0.25).eps_hat
                bound = 2.0 * n * eps * eps + eps * math.sqrt(2.0 * n * math.log(4.0))
                assert got <= bound + 1e-12

    def test_delta_hat_formula_and_clamp(self):
        assert advanced_composition(0.1, 0.001, 10, 0.25).delta_hat == pytest.approx(0.26)
        assert advanced_composition(0.1, 0.2, 10, 0.25).delta_hat == 1.0

    def test_rejects_zero_delta_prime(self):
        with pytest.raises(InvalidInputError):
            advanced_composition(0.1, 0.0, 10, 0.0)


class TestEpsApproximation:
    def test_exact_replication_passes(self, rng):
        # T replicates an integer-weighted distribution exactly; deviations
        # are pure float summation dust, so any eps >= 1e-12 passes
        dom = random_domain(8, rng)
        counts = rng.integers(1, 5, size=dom.size)
        dist = WeightDistribution.normalized(np.arange(dom.size), counts.astype(float))
        multiset = np.repeat(np.arange(dom.size), counts)
        cls = random_class(dom, 32, rng)
        report = eps_approximation_check(multiset, dist, cls, 1e-12, dom)
        assert report.passed
        assert report.worst_deviation <= 1e-12

    def test_singleton_concept_class(self, rng):
        dom = random_domain(8, rng)
        dist = WeightDistribution.uniform(np.arange(dom.size))
        multiset = rng.integers(0, dom.size, size=5)
        cls = HypothesisClass((Hypothesis.dense(dom.labels),))
        report = eps_approximation_check(multiset, dist, cls, 0.0, dom)
        assert report.passed and report.worst_deviation == 0.0

    def test_matches_independent_scan(self, rng):
        dom = random_domain(16, rng)
        dist = WeightDistribution.normalized(np.arange(dom.size), rng.random(dom.size))
        multiset = rng.integers(0, dom.size, size=12)
        cls = random_class(dom, 20, rng)
        report = eps_approximation_check(multiset, dist, cls, 0.1, dom)
        # independent coding: per-hypothesis loop with counting weights
        worst = -1.0
        t_weights = np.bincount(multiset, minlength=dom.size) / multiset.size
        for i, h in enumerate(cls):
            mistakes = (h.evaluate(dom) != dom.labels).astype(float)
            ref = 0.0
            for slot, point in enumerate(dist.indices):
                ref += dist.weights[slot] * mistakes[point]
            emp = float(np.dot(t_weights, mistakes))
            worst = max(worst, abs(ref - emp))
        assert report.worst_deviation == pytest.approx(worst, abs=1e-12)

    def test_vc_sample_size_gives_good_pass_rate(self, rng):
        # desk-scale version of the n ~ (d + ln(1/delta))/eps^2 guarantee
        dom = random_domain(32, rng)
        dist = WeightDistribution.uniform(np.arange(dom.size))
        cls = random_class(dom, 64, rng)
        eps, delta = 0.15, 0.1
        d_eff = math.log2(len(cls))
        n = int(2.0 * (d_eff + math.log(1.0 / delta)) / eps**2)
        passed = 0
        trials = 100
        for _ in range(trials):
            multiset = rng.choice(dom.size, size=n, replace=True, p=dist.weights)
            if eps_approximation_check(multiset, dist, cls, eps, dom).passed:
                passed += 1
        assert passed / trials >= 1.0 - delta


class TestCoinMajorityError:
    def test_single_toss(self):
        for eps in (0.0, 0.2, 0.7, 1.0):
            assert coin_majority_error(1, eps) == pytest.approx((1.0 - eps) / 2.0, abs=1e-14)

    def test_three_tosses_frozen(self):
        assert coin_majority_error(3, 0.2) == pytest.approx(0.352, abs=1e-12)

    def test_even_tie_rule(self):
        # n=2: P[0 heads] + P[1 head]/2 = 0.16 + 0.24
        assert coin_majority_error(2, 0.2) == pytest.approx(0.40, abs=1e-12)

    def test_fair_coin_is_half_for_all_n(self):
        for n in (0, 1, 2, 7, 100, 1001):
            assert coin_majority_error(n, 0.0) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_in_n_odd(self):
        values = [coin_majority_error(n, 0.1) for n in range(1, 402, 2)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_monotone_in_eps(self):
        values = [coin_majority_error(25, e) for e in np.linspace(0.0, 1.0, 51)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_tail_cap(self):
        with pytest.raises(InvalidInputError):
            coin_majority_error(100_001, 0.1)

    def test_exponent_shape_band(self):
        # -ln(error) tracks (eps^2 n + 1) within a constant-factor band
        ratios = []
        for eps in (0.05, 0.1, 0.2):
            for n in (25, 100, 400, 1600):
                ratios.append(
                    -math.log(coin_majority_error(n, eps)) / (eps * eps * n + 1.0)
                )
        assert max(ratios) / min(ratios) <= 5.0


class TestCoinGameSimulate:
    def test_majority_matches_closed_form(self):
        result = coin_game_simulate(3, 0.2, 100_000, RULE_MAJORITY, seed=1)
        assert abs(result.error - 0.352) <= 3.0 * result.std_error

    def test_first_coin_rule(self):
        result = coin_game_simulate(11, 0.3, 50_000, RULE_FIRST_COIN, seed=2)
        assert abs(result.error - 0.35) <= 3.0 * result.std_error

    def test_no_rule_beats_majority(self):
        def half_majority(tosses, rng):
            half = tosses[:, : tosses.shape[1] // 2 + 1]
            return np.where(half.mean(axis=1) >= 0.5, 1, -1)

        closed = coin_majority_error(15, 0.2)
        for rule in (RULE_MAJORITY, RULE_FIRST_COIN, half_majority):
            result = coin_game_simulate(15, 0.2, 40_000, rule, seed=3)
            assert result.error >= closed - 3.0 * result.std_error

    def test_deterministic_given_seed(self):
        a = coin_game_simulate(9, 0.1, 10_000, RULE_MAJORITY, seed=5)
        b = coin_game_simulate(9, 0.1, 10_000, RULE_MAJORITY, seed=5)
        assert a == b


class TestBreimanBound:
    def test_frozen_value(self):
        # (10 ln(1e6) ln(1e5) + ln 10) / (0.01 * 1e6) at 50-digit precision
        assert breiman_bound(10, 10**6, 0.1, 0.1, 1.0) == pytest.approx(
            0.15928720182365134, rel=1e-12
        )

    def test_decreasing_in_m(self):
        previous = None
        for m in (10**3, 10**4, 10**5, 10**6):
            value = breiman_bound(10, m, 0.1, 0.1, 1.0)
            if previous is not None:
                assert value < previous
            previous = value

    def test_delta_near_one_drops_term(self):
        near = breiman_bound(10, 10**6, 0.1, 1.0 - 1e-12, 1.0)
        base = 10 * math.log(10**6) * math.log(10**5) / (0.01 * 10**6)
        assert near == pytest.approx(base, rel=1e-9)

    def test_m_not_larger_than_d_rejected(self):
        with pytest.raises(InvalidInputError):
            breiman_bound(10, 10, 0.1, 0.1, 1.0)
