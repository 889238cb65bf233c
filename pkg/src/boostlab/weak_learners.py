"""Weak-learner oracle contract and two concrete learners.

An oracle answers a weight distribution with a hypothesis (or declares
failure).  ``validated_query`` wraps any oracle, re-measures the answer's
loss, and turns contract breaches into explicit ``AdvantageViolation``
values; a ``QueryLedger`` accounts for rounds and per-round query totals.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .core import (
    LOSS_TOL,
    Hypothesis,
    HypothesisClass,
    LabeledDomain,
    Stump,
    WeightDistribution,
    empirical_loss,
)
from .errors import BudgetError, InvalidInputError


@dataclass(frozen=True)
class AdvantageViolation:
    """Returned when an oracle's answer misses the advertised advantage."""

    measured_loss: float
    threshold: float
    hypothesis: Hypothesis


@dataclass(frozen=True)
class OracleFailure:
    """The oracle declared that no valid hypothesis exists for the query."""

    reason: str = "weak learner declared failure"


@dataclass(eq=False)
class QueryRecord:
    dist_digest: str
    outcome: str  # "ok" | "violation" | "failure"
    answer_digest: str | None
    measured_loss: float | None
    threshold: float


class QueryLedger:
    """Per-round record of oracle calls with (p, t) accounting.

    p is the number of rounds in which at least one call happened; t is the
    total number of calls.  Optional budgets raise when exceeded.
    """

    def __init__(self, round_budget: int | None = None, per_round_budget: int | None = None):
        self.round_budget = round_budget
        self.per_round_budget = per_round_budget
        self.rounds: list[list[QueryRecord]] = []

    def begin_round(self) -> None:
        if self.round_budget is not None and len(self.rounds) >= self.round_budget:
            raise BudgetError(f"round budget {self.round_budget} exceeded")
        self.rounds.append([])

    def record(self, rec: QueryRecord) -> None:
        if not self.rounds:
            self.begin_round()
        current = self.rounds[-1]
        if self.per_round_budget is not None and len(current) >= self.per_round_budget:
            raise BudgetError(f"per-round query budget {self.per_round_budget} exceeded")
        current.append(rec)

    @property
    def rounds_used(self) -> int:
        return sum(1 for r in self.rounds if r)

    @property
    def total_queries(self) -> int:
        return sum(len(r) for r in self.rounds)

    def per_round_counts(self) -> list[int]:
        return [len(r) for r in self.rounds]

    def all_records(self):
        for r in self.rounds:
            yield from r


class WeakLearnerOracle(ABC):
    """Distribution-in, hypothesis-out oracle.

    ``query`` increments the query counter by exactly one per call; drivers
    call ``advance_round`` at the start of every interaction round so that
    stateful oracles (the staged adversary) know the current round.
    Implementations declare ``concurrency_safe``; drivers serialize calls to
    oracles that are not.
    """

    concurrency_safe: bool = True

    def __init__(self):
        self.query_count = 0
        self.round_count = 0

    def advance_round(self) -> None:
        self.round_count += 1

    def query(self, dist: WeightDistribution) -> Hypothesis | None:
        """Answer a query; None means declared failure."""
        self.query_count += 1
        return self._answer(dist)

    @abstractmethod
    def _answer(self, dist: WeightDistribution) -> Hypothesis | None:
        ...


def erm_finite(
    cls: HypothesisClass, dist: WeightDistribution, domain: LabeledDomain
) -> Hypothesis:
    """Minimum-loss member of a finite class; ties go to the lowest index."""
    if len(cls) == 0:
        raise InvalidInputError("empty hypothesis class")
    best = None
    best_loss = np.inf
    for h in cls:
        loss = empirical_loss(h, dist, domain)
        if loss < best_loss:
            best, best_loss = h, loss
    return best


def train_stump(
    features: np.ndarray, labels: np.ndarray, dist: WeightDistribution
) -> Hypothesis:
    """Weighted-error-minimizing decision stump.

    Exhaustive over every feature, every midpoint of consecutive sorted
    feature values plus the two infinite sentinels, and both polarities.
    Ties go to the earliest candidate in that enumeration order.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] == 0:
        raise InvalidInputError("features must be a nonempty 2-d matrix")
    labels = np.asarray(labels)
    if dist.indices.max() >= features.shape[0]:
        raise InvalidInputError("distribution index outside the feature matrix")

    rows = dist.indices
    x = features[rows]
    y = labels[rows]
    w = dist.weights
    n = rows.size
    pos_w = np.where(y > 0, w, 0.0)
    neg_w = np.where(y < 0, w, 0.0)
    total_neg = float(neg_w.sum())
    total = float(pos_w.sum()) + total_neg

    best_err = np.inf
    best: Stump | None = None
    for f in range(features.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xv = x[order, f]
        # split points j: left block = first j sorted rows (x <= threshold);
        # only value changes (plus the two sentinels) are candidates
        js = np.concatenate(
            ([0], np.flatnonzero(xv[1:] > xv[:-1]) + 1, [n])
        )
        cum_pos = np.concatenate(([0.0], np.cumsum(pos_w[order])))
        cum_neg = np.concatenate(([0.0], np.cumsum(neg_w[order])))
        err_plus = cum_pos[js] + (total_neg - cum_neg[js])  # predict +1 on the right
        # candidate order: thresholds ascending, polarity +1 before -1
        pair = np.stack((err_plus, total - err_plus), axis=1).ravel()
        flat = int(np.argmin(pair))
        err = float(pair[flat])
        if err < best_err:
            j = int(js[flat // 2])
            if j == 0:
                theta = -np.inf
            elif j == n:
                theta = np.inf
            else:
                theta = (xv[j - 1] + xv[j]) / 2.0
            best_err, best = err, Stump(f, float(theta), 1 if flat % 2 == 0 else -1)
    return Hypothesis.from_stump(best)


class ErmOracle(WeakLearnerOracle):
    """Exact ERM over a fixed finite class."""

    def __init__(self, cls: HypothesisClass, domain: LabeledDomain):
        super().__init__()
        self.cls = cls
        self.domain = domain

    def _answer(self, dist: WeightDistribution) -> Hypothesis:
        return erm_finite(self.cls, dist, self.domain)


class StumpOracle(WeakLearnerOracle):
    """Trains a decision stump on the domain's feature matrix."""

    def __init__(self, domain: LabeledDomain):
        super().__init__()
        if domain.features is None:
            raise InvalidInputError("stump oracle needs a domain with features")
        self.domain = domain

    def _answer(self, dist: WeightDistribution) -> Hypothesis:
        return train_stump(self.domain.features, self.domain.labels, dist)


def validated_query(
    oracle: WeakLearnerOracle,
    dist: WeightDistribution,
    gamma: float,
    domain: LabeledDomain,
    ledger: QueryLedger | None = None,
) -> Hypothesis | AdvantageViolation | OracleFailure:
    """Query the oracle and re-measure the answer against 1/2 - gamma.

    Answers whose measured loss exceeds the threshold (beyond 1e-12 float
    slack) come back as AdvantageViolation; declared failures come back as
    OracleFailure.  Either way the call is recorded in the ledger.
    """
    if not 0.0 < gamma < 0.5:
        raise InvalidInputError("gamma must lie in (0, 1/2)")
    threshold = 0.5 - gamma
    answer = oracle.query(dist)
    if answer is None:
        if ledger is not None:
            ledger.record(QueryRecord(dist.digest(), "failure", None, None, threshold))
        return OracleFailure()
    loss = empirical_loss(answer, dist, domain)
    outcome = "ok" if loss <= threshold + LOSS_TOL else "violation"
    if ledger is not None:
        ledger.record(
            QueryRecord(dist.digest(), outcome, answer.digest(domain), loss, threshold)
        )
    if outcome == "violation":
        return AdvantageViolation(loss, threshold, answer)
    return answer
