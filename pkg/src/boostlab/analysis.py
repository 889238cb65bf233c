"""Numeric verification toolkit.

Max-divergence between query distributions, the advanced composition rule
for product distributions, exhaustive epsilon-approximation certification,
exact and simulated coin-game errors, and the min-margin generalization
bound evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln, logsumexp

from .adaboost import LOG_TOL, BoostTrace
from .core import HypothesisClass, LabeledDomain, WeightDistribution, empirical_loss
from .errors import InvalidInputError, UnsupportedTraceError

# Exact binomial summation is used (no normal approximation); past this many
# tosses, refuse rather than approximate.
MAX_COIN_TOSSES = 100_000


def max_divergence(a: WeightDistribution, b: WeightDistribution) -> float:
    """ln of the largest pointwise ratio a/b over the support of a.

    Infinite when a puts mass where b has none.  The two distributions must
    share an index set.
    """
    if not np.array_equal(a.indices, b.indices):
        raise InvalidInputError("distributions must share an index set")
    mask = a.weights > 0.0
    if not mask.any():
        return 0.0
    if np.any(b.weights[mask] == 0.0):
        return math.inf
    return float(np.log(np.max(a.weights[mask] / b.weights[mask])))


@dataclass(eq=False)
class DivergenceReport:
    """Per-step and per-window max-divergence values against their bounds."""

    step_bound: float
    window_bound: float
    steps: list[tuple[int, float, float]] = field(default_factory=list)
    windows: list[tuple[int, int, float, float]] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_step_value(self) -> float:
        return max((max(f, r) for _, f, r in self.steps), default=0.0)

    @property
    def max_window_value(self) -> float:
        return max((max(f, r) for _, _, f, r in self.windows), default=0.0)


def check_trace_divergence(trace: BoostTrace, gamma: float, window_steps: int) -> DivergenceReport:
    """Check every consecutive snapshot pair against 2*gamma and every
    window anchored at multiples of ``window_steps`` against 2*gamma*R,
    in both directions."""
    if not trace.has_all_snapshots():
        raise UnsupportedTraceError("trace does not retain all distribution snapshots")
    snaps = trace.snapshots
    report = DivergenceReport(step_bound=2.0 * gamma, window_bound=2.0 * gamma * window_steps)
    for i in range(len(snaps) - 1):
        fwd = max_divergence(snaps[i], snaps[i + 1])
        rev = max_divergence(snaps[i + 1], snaps[i])
        report.steps.append((i, fwd, rev))
        if max(fwd, rev) > report.step_bound + LOG_TOL:
            report.violations.append(
                f"step {i}: divergence {max(fwd, rev):.12g} > {report.step_bound:.12g}"
            )
    for anchor in range(0, len(snaps) - 1, window_steps):
        for r in range(anchor + 1, min(anchor + window_steps, len(snaps) - 1) + 1):
            fwd = max_divergence(snaps[anchor], snaps[r])
            rev = max_divergence(snaps[r], snaps[anchor])
            report.windows.append((anchor, r, fwd, rev))
            if max(fwd, rev) > report.window_bound + LOG_TOL:
                report.violations.append(
                    f"window ({anchor},{r}): divergence {max(fwd, rev):.12g} > "
                    f"{report.window_bound:.12g}"
                )
    return report


@dataclass(frozen=True)
class CompositionResult:
    eps_hat: float
    delta_hat: float

    def __post_init__(self):
        if self.eps_hat < 0.0 or not 0.0 <= self.delta_hat <= 1.0:
            raise InvalidInputError("composition result out of range")


def advanced_composition(eps: float, delta: float, n: int, delta_prime: float) -> CompositionResult:
    """n-fold composition of (eps, delta)-indistinguishability.

    eps_hat = n*eps*(e^eps - 1) + eps*sqrt(2*n*ln(1/delta')),
    delta_hat = n*delta + delta' (clamped to 1).
    """
    if eps < 0.0:
        raise InvalidInputError("eps must be nonnegative")
    if not 0.0 <= delta < 1.0:
        raise InvalidInputError("delta must lie in [0, 1)")
    if not 0.0 < delta_prime < 1.0:
        raise InvalidInputError("delta_prime must lie in (0, 1)")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    eps_hat = n * eps * math.expm1(eps) + eps * math.sqrt(2.0 * n * math.log(1.0 / delta_prime))
    delta_hat = min(1.0, n * delta + delta_prime)
    return CompositionResult(eps_hat, delta_hat)


@dataclass(frozen=True)
class ApproxReport:
    """Result of an exhaustive epsilon-approximation check."""

    passed: bool
    worst_index: int
    worst_deviation: float
    eps: float


def eps_approximation_check(
    multiset: np.ndarray,
    dist: WeightDistribution,
    cls: HypothesisClass,
    eps: float,
    domain: LabeledDomain,
) -> ApproxReport:
    """Does the uniform distribution over ``multiset`` track ``dist`` within
    eps on the loss of every class member?  Exhaustive; reports the worst
    offender."""
    if eps < 0.0:
        raise InvalidInputError("eps must be nonnegative")
    multiset = np.asarray(multiset, dtype=np.int64)
    if multiset.size == 0:
        raise InvalidInputError("empty multiset")
    uniform_t = WeightDistribution.uniform(multiset)
    worst_index, worst = -1, -1.0
    for i, h in enumerate(cls):
        dev = abs(empirical_loss(h, dist, domain) - empirical_loss(h, uniform_t, domain))
        if dev > worst:
            worst_index, worst = i, dev
    return ApproxReport(worst <= eps, worst_index, worst, eps)


def coin_majority_error(n: int, eps: float) -> float:
    """Exact error of the majority rule on n tosses of a +-eps biased coin.

    P[Bin(n, (1+eps)/2) < n/2] plus half the tie mass for even n, summed
    exactly in log-space.
    """
    if n < 0:
        raise InvalidInputError("n must be nonnegative")
    if n > MAX_COIN_TOSSES:
        raise InvalidInputError(f"exact summation capped at n = {MAX_COIN_TOSSES}")
    if not 0.0 <= eps <= 1.0:
        raise InvalidInputError("eps must lie in [0, 1]")
    if n == 0:
        return 0.5
    p = (1.0 + eps) / 2.0
    if p == 1.0:
        return 0.0
    log_p, log_q = math.log(p), math.log1p(-p)
    ks = np.arange(0, n // 2 + 1)
    log_terms = (
        gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1) + ks * log_p + (n - ks) * log_q
    )
    if n % 2 == 0:
        # fair-coin tie rule: the boundary term k = n/2 counts half
        log_terms[-1] -= math.log(2.0)
    return float(math.exp(logsumexp(log_terms)))


RULE_MAJORITY = "majority"
RULE_FIRST_COIN = "first"


@dataclass(frozen=True)
class CoinGameResult:
    error: float
    std_error: float
    trials: int


def coin_game_simulate(
    n: int,
    eps: float,
    trials: int,
    rule: str | Callable[[np.ndarray, np.random.Generator], np.ndarray] = RULE_MAJORITY,
    seed: int = 0,
    batch_size: int = 20_000,
) -> CoinGameResult:
    """Monte Carlo coin game: hidden sign b, n tosses of Ber((1 + b*eps)/2).

    ``rule`` maps a (batch, n) boolean toss matrix to +-1 decisions; the
    built-in rules are majority (fair-coin ties) and first-coin.  Returns the
    empirical error with its binomial standard error.
    """
    if trials < 1 or n < 1:
        raise InvalidInputError("trials and n must be >= 1")
    if not 0.0 <= eps <= 1.0:
        raise InvalidInputError("eps must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    wrong = 0
    remaining = trials
    while remaining > 0:
        bs = min(batch_size, remaining)
        remaining -= bs
        b = rng.integers(0, 2, size=bs) * 2 - 1
        p = (1.0 + b * eps) / 2.0
        tosses = rng.random((bs, n)) < p[:, None]
        if rule == RULE_MAJORITY:
            score = 2 * tosses.sum(axis=1) - n
            decision = np.sign(score).astype(np.int64)
            ties = decision == 0
            if ties.any():
                decision[ties] = rng.integers(0, 2, size=int(ties.sum())) * 2 - 1
        elif rule == RULE_FIRST_COIN:
            decision = tosses[:, 0].astype(np.int64) * 2 - 1
        elif callable(rule):
            decision = np.asarray(rule(tosses, rng), dtype=np.int64)
        else:
            raise InvalidInputError(f"unknown rule {rule!r}")
        wrong += int((decision != b).sum())
    error = wrong / trials
    return CoinGameResult(error, math.sqrt(error * (1.0 - error) / trials), trials)


def breiman_bound(
    vc_dim: int, m: int, gamma: float, delta: float, alpha_gen: float
) -> float:
    """Min-margin generalization bound:
    alpha_gen * (d ln(m) ln(m/d) + ln(1/delta)) / (gamma^2 m)."""
    if vc_dim < 1 or m <= vc_dim:
        raise InvalidInputError("need m > vc_dim >= 1")
    if not 0.0 < gamma < 1.0 or not 0.0 < delta < 1.0:
        raise InvalidInputError("gamma and delta must lie in (0, 1)")
    if alpha_gen <= 0.0:
        raise InvalidInputError("alpha_gen must be positive")
    return (
        alpha_gen
        * (vc_dim * math.log(m) * math.log(m / vc_dim) + math.log(1.0 / delta))
        / (gamma * gamma * m)
    )
