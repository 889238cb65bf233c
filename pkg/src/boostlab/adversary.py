"""Staged adversarial weak learner and its Bayes-optimal loss floor.

The instance hides a uniformly random concept over 2m points behind P
stages.  Each stage holds one hypothesis that agrees with the concept
independently with probability 1/2 + bias_multiplier * gamma, plus 2^log2_random
uniformly random hypotheses.  Queries are answered by the first hypothesis
in global stage order whose loss is at most 1/2 - gamma; the concept itself
sits last as a fallback, so an answer always exists.  Any answer drawn from
beyond the current round's stage window (or from the fallback) is a leak.

Per point, each revealed biased hypothesis is one coin flip with bias
2 * bias_multiplier * gamma toward the true label, which is what makes the
coin-game floor the right baseline for any booster playing against this
oracle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import coin_majority_error
from .core import (
    Hypothesis,
    HypothesisClass,
    LabeledDomain,
    WeightDistribution,
    empirical_loss,
    spreadness,
)
from .errors import InvalidInputError
from .seeding import substream
from .weak_learners import WeakLearnerOracle

# Margin subtracted from the fast float32 scan threshold; candidates are
# re-checked exactly in float64 before being returned.
_SCAN_SLACK = 1e-3


@dataclass(frozen=True)
class AdversaryConfig:
    """Construction parameters for one adversarial instance.

    Defaults satisfy the constraint bias_multiplier >= 3 * spread_threshold + 1
    used by the spread-query analysis; log2_random defaults to 2 * vc_dim.
    The admissible advantage range is gamma < 1/(2 * bias_multiplier).
    """

    m: int
    vc_dim: int
    gamma: float
    rounds: int
    stages_per_round: int = 1
    bias_multiplier: float = 7.0
    spread_threshold: float = 2.0
    log2_random: int | None = None
    seed: int = 0
    max_label_entries: int = 2**27

    def __post_init__(self):
        if self.m < 1 or self.vc_dim < 1 or self.rounds < 1 or self.stages_per_round < 1:
            raise InvalidInputError("m, vc_dim, rounds, stages_per_round must be >= 1")
        if not 0.0 < self.gamma:
            raise InvalidInputError("gamma must be positive")
        if self.bias_multiplier * self.gamma >= 0.5:
            raise InvalidInputError(
                "bias_multiplier * gamma must stay below 1/2 (bias must be a probability)"
            )
        if self.log2_random is None:
            object.__setattr__(self, "log2_random", 2 * self.vc_dim)
        if self.log2_random < 1:
            raise InvalidInputError("log2_random must be >= 1")
        entries = self.total_stages * (1 + 2**self.log2_random) * 2 * self.m
        if entries > self.max_label_entries:
            raise InvalidInputError(
                f"instance needs {entries} labels, above the desk-scale cap "
                f"{self.max_label_entries}; lower vc_dim/log2_random or m"
            )

    @property
    def total_stages(self) -> int:
        return self.rounds * self.stages_per_round

    def to_descriptor(self) -> dict:
        """Seeded descriptor; instances are exported by regeneration, never as labels."""
        return {
            "m": self.m,
            "vc_dim": self.vc_dim,
            "gamma": self.gamma,
            "rounds": self.rounds,
            "stages_per_round": self.stages_per_round,
            "bias_multiplier": self.bias_multiplier,
            "spread_threshold": self.spread_threshold,
            "log2_random": self.log2_random,
            "seed": self.seed,
        }

    @classmethod
    def from_descriptor(cls, d: dict) -> "AdversaryConfig":
        return cls(**d)


@dataclass(frozen=True)
class LeakEvent:
    round_index: int
    query_index: int
    stage: int  # total_stages + 1 means the concept fallback


@dataclass(frozen=True)
class AnswerEvent:
    round_index: int
    query_index: int
    stage: int
    member: int
    biased: bool
    leaked: bool


class AdversarialInstance:
    """Immutable staged construction plus append-only answer/leak logs."""

    def __init__(self, cfg: AdversaryConfig, domain: LabeledDomain, stages: list[np.ndarray]):
        self.cfg = cfg
        self.domain = domain
        self.stages = stages  # stage i (1-based) at stages[i-1]: (1 + 2^log2_random, 2m) int8
        self.leak_log: list[LeakEvent] = []
        self.answer_log: list[AnswerEvent] = []
        self._stage_f32: dict[int, np.ndarray] = {}

    @property
    def total_hypotheses(self) -> int:
        return self.cfg.total_stages * (1 + 2**self.cfg.log2_random) + 1

    def stage_class(self, stage: int) -> HypothesisClass:
        mat = self.stages[stage - 1]
        return HypothesisClass(tuple(Hypothesis.dense(row) for row in mat))

    def biased_hypothesis(self, stage: int) -> Hypothesis:
        return Hypothesis.dense(self.stages[stage - 1][0])

    def stages_with_bias_revealed(self) -> set[int]:
        return {ev.stage for ev in self.answer_log if ev.biased}

    def max_stage_answered(self) -> int:
        return max((ev.stage for ev in self.answer_log), default=0)

    def _f32(self, stage: int) -> np.ndarray:
        cached = self._stage_f32.get(stage)
        if cached is None:
            cached = self.stages[stage - 1].astype(np.float32)
            self._stage_f32[stage] = cached
        return cached

    def _answer_one(
        self, dist: WeightDistribution, round_index: int, query_index: int, gamma: float
    ) -> Hypothesis:
        cfg = self.cfg
        # Signed weights per domain point: mass times true label, duplicates merged.
        signed = np.zeros(self.domain.size)
        np.add.at(
            signed,
            dist.indices,
            dist.weights * self.domain.labels[dist.indices].astype(np.float64),
        )
        signed32 = signed.astype(np.float32)
        corr_needed = 2.0 * gamma  # loss <= 1/2 - gamma  <=>  correlation >= 2*gamma
        window = round_index * cfg.stages_per_round
        threshold = 0.5 - gamma

        for stage in range(1, cfg.total_stages + 1):
            corr = self._f32(stage) @ signed32
            for member in np.flatnonzero(corr >= corr_needed - _SCAN_SLACK):
                h = Hypothesis.dense(self.stages[stage - 1][member])
                if empirical_loss(h, dist, self.domain) <= threshold:
                    leaked = stage > window
                    self.answer_log.append(
                        AnswerEvent(round_index, query_index, stage, int(member), member == 0, leaked)
                    )
                    if leaked:
                        self.leak_log.append(LeakEvent(round_index, query_index, stage))
                    return h
        # Concept fallback: loss 0, always valid for gamma < 1/2.
        concept = Hypothesis.dense(self.domain.labels)
        if empirical_loss(concept, dist, self.domain) > threshold:
            raise RuntimeError("defensive invariant violated: even the concept failed the query")
        stage = cfg.total_stages + 1
        self.answer_log.append(AnswerEvent(round_index, query_index, stage, 0, False, True))
        self.leak_log.append(LeakEvent(round_index, query_index, stage))
        return concept


def build_instance(cfg: AdversaryConfig) -> AdversarialInstance:
    """Sample the concept and all P stage classes from per-stage substreams."""
    two_m = 2 * cfg.m
    concept_rng = substream(cfg.seed, "concept")
    labels = (concept_rng.integers(0, 2, size=two_m, dtype=np.int8) * 2 - 1).astype(np.int8)
    domain = LabeledDomain(labels, cfg.m)
    agree_prob = 0.5 + cfg.bias_multiplier * cfg.gamma
    stages: list[np.ndarray] = []
    for stage in range(1, cfg.total_stages + 1):
        rng = substream(cfg.seed, "stage", stage)
        mat = np.empty((1 + 2**cfg.log2_random, two_m), dtype=np.int8)
        agree = rng.random(two_m) < agree_prob
        mat[0] = np.where(agree, labels, -labels)
        mat[1:] = rng.integers(0, 2, size=(2**cfg.log2_random, two_m), dtype=np.int8) * 2 - 1
        mat.flags.writeable = False
        stages.append(mat)
    return AdversarialInstance(cfg, domain, stages)


def answer_round(
    instance: AdversarialInstance,
    round_index: int,
    queries: list[WeightDistribution],
    gamma: float,
) -> list[Hypothesis]:
    """Answer one round of queries by first-valid-in-order scan.

    Every returned hypothesis has measured loss at most 1/2 - gamma on its
    query (exact).  Answers from stages beyond round_index * stages_per_round
    and fallback answers are recorded in the instance's leak log.
    """
    if not 1 <= round_index <= instance.cfg.rounds:
        raise InvalidInputError("round_index must lie in [1, rounds]")
    answers = []
    for qi, dist in enumerate(queries):
        if dist.indices.max() >= instance.domain.size:
            raise InvalidInputError("query distribution index outside the domain")
        answers.append(instance._answer_one(dist, round_index, qi, gamma))
    return answers


class AdversaryOracle(WeakLearnerOracle):
    """Oracle adapter; drivers advance the round counter between rounds."""

    def __init__(self, instance: AdversarialInstance, gamma: float):
        super().__init__()
        self.instance = instance
        self.gamma = gamma
        self._query_in_round = 0
        self._last_round = 0

    def _answer(self, dist: WeightDistribution) -> Hypothesis:
        if self.round_count < 1:
            raise InvalidInputError("advance_round() must be called before querying")
        if self.round_count != self._last_round:
            self._last_round = self.round_count
            self._query_in_round = 0
        qi = self._query_in_round
        self._query_in_round += 1
        if not 1 <= self.round_count <= self.instance.cfg.rounds:
            raise InvalidInputError("round counter outside [1, rounds]")
        return self.instance._answer_one(dist, self.round_count, qi, self.gamma)


class QueryKind(enum.Enum):
    SPREAD = "spread"
    CONCENTRATED = "concentrated"


def classify_query(
    dist: WeightDistribution, vc_dim: int, spread_threshold: float, gamma: float
) -> QueryKind:
    """Diagnostic mirror of the spread/concentrated dichotomy.

    Spread iff the spreadness statistic falls below spread_threshold * gamma.
    The answering path never consults this; it decides by exact losses.
    """
    if spreadness(dist, vc_dim) < spread_threshold * gamma:
        return QueryKind.SPREAD
    return QueryKind.CONCENTRATED


def bayes_optimal_loss(
    stages_seen: int, gamma: float, bias_multiplier: float, unseen_fraction: float
) -> float:
    """Loss floor: unseen mass times the optimal coin-game error.

    Each of ``stages_seen`` revealed biased hypotheses contributes one coin
    flip with bias 2 * bias_multiplier * gamma per unseen point; majority
    over those flips is the full-information optimum.
    """
    eps = 2.0 * bias_multiplier * gamma
    if not 0.0 < eps < 1.0:
        raise InvalidInputError("2 * bias_multiplier * gamma must lie in (0, 1)")
    if not 0.0 <= unseen_fraction <= 1.0:
        raise InvalidInputError("unseen_fraction must lie in [0, 1]")
    return unseen_fraction * coin_majority_error(stages_seen, eps)


def target_distribution(
    instance: AdversarialInstance,
) -> tuple[WeightDistribution, np.ndarray]:
    """Uniform distribution over the 2m labeled points, plus the labels."""
    idx = np.arange(instance.domain.size, dtype=np.int64)
    return WeightDistribution.uniform(idx), instance.domain.labels.copy()
