"""AdaBoost with a fixed learning rate, log-space loss tracking, and margins.

The booster queries a weak-learner oracle once per round, accepts any answer
whose loss is at most 1/2 - gamma/4, tilts the weights multiplicatively, and
finally aggregates all chosen hypotheses by a uniform vote.  Exponential
losses are tracked in log-space throughout: at paper-faithful parameters the
accumulated exponents overflow direct exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    LOSS_TOL,
    Hypothesis,
    LabeledDomain,
    TrainingSet,
    WeightDistribution,
    empirical_loss,
    margins_at,
)
from .errors import InvalidInputError
from .weak_learners import QueryLedger, QueryRecord, WeakLearnerOracle

# Tolerance on log-space decay and divergence inequalities.
LOG_TOL = 1e-9


def learning_rate(gamma: float) -> float:
    """Fixed rate w = ln((1/2 + gamma/4) / (1/2 - gamma/4)) / 2.

    Defined for 0 <= gamma < 2; callers use gamma in (0, 1/2], where w <= gamma.
    """
    if gamma < 0.0 or gamma >= 2.0:
        raise InvalidInputError("gamma must lie in [0, 2)")
    return 0.5 * math.log((0.5 + gamma / 4.0) / (0.5 - gamma / 4.0))


def update_distribution(
    dist: WeightDistribution, h: Hypothesis, domain: LabeledDomain, rate: float
) -> WeightDistribution:
    """Multiply slot i by exp(-c(x_i) h(x_i) w), then renormalize."""
    if rate < 0.0:
        raise InvalidInputError("rate must be nonnegative")
    agreement = h.at(domain, dist.indices) * domain.labels[dist.indices]
    scaled = dist.weights * np.exp(-rate * agreement.astype(np.float64))
    return WeightDistribution(dist.indices, scaled / scaled.sum())


@dataclass(frozen=True)
class SnapshotPolicy:
    """What per-round distribution state a trace retains.

    mode "all" keeps every snapshot, "window" the trailing ``window`` ones,
    "none" only digests.
    """

    mode: str = "all"
    window: int = 8

    def __post_init__(self):
        if self.mode not in ("all", "window", "none"):
            raise InvalidInputError(f"unknown snapshot mode {self.mode!r}")


SNAPSHOT_ALL = SnapshotPolicy("all")
SNAPSHOT_NONE = SnapshotPolicy("none")


@dataclass(eq=False)
class RoundRecord:
    dist_digest: str
    hypothesis: Hypothesis
    hypothesis_digest: str
    loss: float
    log_z: float


class BoostTrace:
    """Per-round ledger: distributions, chosen hypotheses, losses, log Z values.

    ``snapshots[r]`` is the distribution the round-r query was made with
    (None if dropped by the retention policy); one trailing snapshot holds
    the final distribution.
    """

    def __init__(
        self,
        gamma: float,
        accept_gamma: float,
        rate: float,
        target_rounds: int,
        training: TrainingSet,
        initial_dist: WeightDistribution,
        snapshot_policy: SnapshotPolicy = SNAPSHOT_ALL,
    ):
        self.gamma = gamma
        self.accept_gamma = accept_gamma
        self.rate = rate
        self.target_rounds = target_rounds
        self.training_indices = training.indices
        self.snapshot_policy = snapshot_policy
        self.records: list[RoundRecord] = []
        self.snapshots: list[WeightDistribution | None] = []
        self._retain(initial_dist)

    def _retain(self, dist: WeightDistribution) -> None:
        policy = self.snapshot_policy
        if policy.mode == "none":
            self.snapshots.append(None)
            return
        self.snapshots.append(dist)
        if policy.mode == "window":
            cutoff = len(self.snapshots) - (policy.window + 1)
            for i in range(max(cutoff, 0)):
                self.snapshots[i] = None

    def append_round(
        self,
        dist_digest: str,
        h: Hypothesis,
        h_digest: str,
        loss: float,
        log_z: float,
        next_dist: WeightDistribution,
    ) -> None:
        self.records.append(RoundRecord(dist_digest, h, h_digest, loss, log_z))
        self._retain(next_dist)

    @property
    def round_count(self) -> int:
        return len(self.records)

    @property
    def chosen(self) -> list[Hypothesis]:
        return [rec.hypothesis for rec in self.records]

    def log_z_sequence(self) -> list[float]:
        """log Z_0 .. log Z_K; Z_0 equals the number of training slots."""
        return [math.log(self.training_indices.size)] + [rec.log_z for rec in self.records]

    def has_all_snapshots(self) -> bool:
        return all(s is not None for s in self.snapshots)

    def equals(self, other: "BoostTrace") -> bool:
        """Bit-for-bit trace comparison (used by degeneration checks)."""
        if (
            self.gamma != other.gamma
            or self.rate != other.rate
            or self.round_count != other.round_count
            or not np.array_equal(self.training_indices, other.training_indices)
        ):
            return False
        for a, b in zip(self.records, other.records):
            if (
                a.dist_digest != b.dist_digest
                or a.hypothesis_digest != b.hypothesis_digest
                or a.loss != b.loss
                or a.log_z != b.log_z
            ):
                return False
        for sa, sb in zip(self.snapshots, other.snapshots):
            if (sa is None) != (sb is None):
                return False
            if sa is not None and not sa.equals(sb):
                return False
        return True


@dataclass(frozen=True, eq=False)
class VotingClassifier:
    """Uniform vote over K hypotheses; sign(0) resolves to +1."""

    voters: tuple[Hypothesis, ...]

    def __post_init__(self):
        if not self.voters:
            raise InvalidInputError("voting classifier needs at least one voter")
        object.__setattr__(self, "voters", tuple(self.voters))

    def votes(self, domain: LabeledDomain) -> np.ndarray:
        """g(x) = (1/K) sum_k h_k(x), exactly."""
        acc = np.zeros(domain.size, dtype=np.int64)
        for h in self.voters:
            acc += h.evaluate(domain)
        return acc / len(self.voters)

    def predict(self, domain: LabeledDomain) -> np.ndarray:
        g = self.votes(domain)
        return np.where(g >= 0.0, 1, -1).astype(np.int8)

    def error_rate(self, domain: LabeledDomain, indices: np.ndarray | None = None) -> float:
        preds = self.predict(domain)
        if indices is None:
            return float(np.mean(preds != domain.labels))
        return float(np.mean(preds[indices] != domain.labels[indices]))


def exponential_loss(
    trace: BoostTrace, domain: LabeledDomain, round_index: int | None = None
) -> tuple[np.ndarray, float]:
    """Per-slot log Z_{i,j} and total log Z_i after ``round_index`` rounds.

    Recomputed from the chosen hypotheses; the total uses a stable
    log-sum-exp.  Defaults to the full trace.
    """
    if round_index is None:
        round_index = trace.round_count
    if round_index < 0 or round_index > trace.round_count:
        raise InvalidInputError("round_index outside the trace")
    idx = trace.training_indices
    log_z_points = np.zeros(idx.size)
    truth = domain.labels[idx].astype(np.float64)
    for rec in trace.records[:round_index]:
        log_z_points -= trace.rate * truth * rec.hypothesis.at(domain, idx)
    return log_z_points, float(logsumexp(log_z_points))


def min_margin(vc: VotingClassifier, training: TrainingSet, domain: LabeledDomain) -> float:
    """Minimum of c(x) g(x) over the training points."""
    votes = vc.votes(domain)
    return float(margins_at(votes, training.indices, domain).min())


def check_z_decay(trace: BoostTrace, gamma: float | None = None) -> list[str]:
    """Violations of the per-round log Z decay bound.

    For every round whose accepted loss is at most 1/2 - gamma/4, the log Z
    value must drop by at least |ln(1 - gamma^2/4)| / 2.
    """
    if gamma is None:
        gamma = trace.gamma
    bound = 0.5 * math.log(1.0 - gamma * gamma / 4.0)
    seq = trace.log_z_sequence()
    violations = []
    for r, rec in enumerate(trace.records):
        if rec.loss > 0.5 - gamma / 4.0 + LOSS_TOL:
            continue
        step = seq[r + 1] - seq[r]
        if step > bound + LOG_TOL:
            violations.append(f"round {r}: log Z step {step:.12g} > bound {bound:.12g}")
    return violations


@dataclass(frozen=True, eq=False)
class BoostSuccess:
    classifier: VotingClassifier
    trace: BoostTrace


@dataclass(frozen=True, eq=False)
class BoostFailure:
    """No acceptable hypothesis at ``round_index``; the partial trace is kept."""

    round_index: int
    best_loss: float | None
    trace: BoostTrace


class _BoostState:
    """Shared per-round bookkeeping for the sequential and bagging drivers.

    Both drivers funnel accepted hypotheses through ``accept`` so that their
    traces are bit-for-bit comparable.
    """

    def __init__(
        self,
        domain: LabeledDomain,
        training: TrainingSet,
        gamma: float,
        accept_gamma: float,
        rate: float,
        target_rounds: int,
        snapshot_policy: SnapshotPolicy,
        initial_dist: WeightDistribution | None = None,
    ):
        self.domain = domain
        self.training = training
        self.rate = rate
        self.dist = initial_dist if initial_dist is not None else WeightDistribution.uniform(
            training.indices
        )
        self.log_z_points = np.zeros(training.indices.size)
        self._truth = domain.labels[training.indices].astype(np.float64)
        self.trace = BoostTrace(
            gamma, accept_gamma, rate, target_rounds, training, self.dist, snapshot_policy
        )

    def accept(self, h: Hypothesis, loss: float) -> None:
        self.log_z_points -= self.rate * self._truth * h.at(self.domain, self.training.indices)
        next_dist = update_distribution(self.dist, h, self.domain, self.rate)
        self.trace.append_round(
            self.dist.digest(),
            h,
            h.digest(self.domain),
            loss,
            float(logsumexp(self.log_z_points)),
            next_dist,
        )
        self.dist = next_dist


def run_adaboost(
    domain: LabeledDomain,
    training: TrainingSet,
    oracle: WeakLearnerOracle,
    gamma: float,
    rounds: int,
    accept_gamma: float | None = None,
    snapshot_policy: SnapshotPolicy = SNAPSHOT_ALL,
    ledger: QueryLedger | None = None,
) -> BoostSuccess | BoostFailure:
    """One oracle call per round for ``rounds`` rounds, then a uniform vote.

    A round is accepted when the answer's loss is at most
    1/2 - accept_gamma (default gamma/4) plus float slack; otherwise the run
    stops with a BoostFailure naming the round.  accept_gamma = 0 accepts
    anything not worse than random, which is how calibration probes run.
    """
    if rounds < 1:
        raise InvalidInputError("rounds must be >= 1")
    training.validate_for(domain)
    if accept_gamma is None:
        accept_gamma = gamma / 4.0
    if not 0.0 <= accept_gamma < 0.5:
        raise InvalidInputError("accept_gamma must lie in [0, 1/2)")
    rate = learning_rate(gamma)
    threshold = 0.5 - accept_gamma
    state = _BoostState(domain, training, gamma, accept_gamma, rate, rounds, snapshot_policy)

    for r in range(rounds):
        oracle.advance_round()
        if ledger is not None:
            ledger.begin_round()
        answer = oracle.query(state.dist)
        if answer is None:
            if ledger is not None:
                ledger.record(
                    QueryRecord(state.dist.digest(), "failure", None, None, threshold)
                )
            return BoostFailure(r, None, state.trace)
        loss = empirical_loss(answer, state.dist, domain)
        accepted = loss <= threshold + LOSS_TOL
        if ledger is not None:
            ledger.record(
                QueryRecord(
                    state.dist.digest(),
                    "ok" if accepted else "violation",
                    answer.digest(domain),
                    loss,
                    threshold,
                )
            )
        if not accepted:
            return BoostFailure(r, loss, state.trace)
        state.accept(answer, loss)

    return BoostSuccess(VotingClassifier(tuple(state.trace.chosen)), state.trace)
