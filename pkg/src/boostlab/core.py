"""Domain, distribution, hypothesis, loss, margin, and spreadness primitives.

The learning tasks here are finite and realizable: a domain of 2m points
carries a fixed ±1 concept, hypotheses are ±1 labelings of the domain (dense
vectors, or threshold stumps for feature-vector demos), and boosters work
with unit-normalized weight vectors over training indices.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

# Normalization tolerance for weight vectors; re-checked after every
# construction or update.
NORMALIZATION_TOL = 1e-9

# Slack absorbing float accumulation when a measured loss is compared
# against an advantage threshold.
LOSS_TOL = 1e-12


def stable_ceil(x: float) -> int:
    """Ceiling with a 1e-9 nudge against float dust.

    Parameter formulas like ceil(c*d/gamma^2) are specified in real
    arithmetic; in floats, 0.1/0.01 evaluates slightly above 10 and a raw
    ceil would return 11.
    """
    return int(math.ceil(x - 1e-9))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LabeledDomain:
    """Finite input universe of 2m points with a ±1 ground-truth concept.

    ``labels[i]`` is the concept value of point i.  ``features`` is an
    optional (2m, dim) matrix backing threshold-stump hypotheses; abstract
    domains leave it None.
    """

    labels: np.ndarray
    m: int
    features: np.ndarray | None = None
    points: tuple = ()

    def __post_init__(self):
        labels = _readonly(np.array(self.labels, dtype=np.int8))
        object.__setattr__(self, "labels", labels)
        if self.m < 1:
            raise InvalidInputError("m must be >= 1")
        if labels.shape != (2 * self.m,):
            raise InvalidInputError(
                f"domain must have exactly 2*m = {2 * self.m} labels, got {labels.shape}"
            )
        if not np.all(np.abs(labels) == 1):
            raise InvalidInputError("labels must all be +1 or -1")
        points = self.points or tuple(range(2 * self.m))
        if len(points) != 2 * self.m or len(set(points)) != len(points):
            raise InvalidInputError("point identifiers must be distinct and cover the domain")
        object.__setattr__(self, "points", tuple(points))
        if self.features is not None:
            feats = _readonly(np.array(self.features, dtype=np.float64))
            if feats.ndim != 2 or feats.shape[0] != 2 * self.m:
                raise InvalidInputError("features must be a (2m, dim) matrix")
            object.__setattr__(self, "features", feats)

    @property
    def size(self) -> int:
        return 2 * self.m


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Multiset of domain indices: the projection of the sample plus multiplicity."""

    indices: np.ndarray

    def __post_init__(self):
        idx = _readonly(np.array(self.indices, dtype=np.int64))
        if idx.ndim != 1 or idx.size == 0:
            raise InvalidInputError("training set must be a nonempty 1-d index array")
        if idx.min() < 0:
            raise InvalidInputError("training indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    def validate_for(self, domain: LabeledDomain) -> None:
        if self.indices.max() >= domain.size:
            raise InvalidInputError("training index outside the domain")

    @property
    def sample_count(self) -> int:
        return int(self.indices.size)

    def unique_points(self) -> np.ndarray:
        return np.unique(self.indices)

    def unseen_fraction(self, domain: LabeledDomain) -> float:
        return 1.0 - self.unique_points().size / domain.size


@dataclass(frozen=True, eq=False)
class WeightDistribution:
    """Nonnegative, unit-normalized weights over a fixed index vector.

    ``indices`` maps weight slots to domain positions and may contain
    repeats (training multisets keep one slot per draw).  Instances are
    immutable; updates produce new values.
    """

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = _readonly(np.ascontiguousarray(self.indices, dtype=np.int64))
        w = _readonly(np.ascontiguousarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)
        if idx.ndim != 1 or w.shape != idx.shape:
            raise InvalidInputError("indices and weights must be 1-d arrays of equal length")
        if idx.size == 0:
            raise InvalidInputError("empty distribution")
        if idx.min() < 0:
            raise InvalidInputError("negative domain index")
        if w.min() < 0.0:
            raise InvalidInputError("negative weight")
        total = float(w.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidInputError(f"weights sum to {total!r}, not 1 within {NORMALIZATION_TOL}")

    @classmethod
    def uniform(cls, indices: np.ndarray) -> "WeightDistribution":
        idx = np.asarray(indices, dtype=np.int64)
        return cls(idx, np.full(idx.size, 1.0 / idx.size))

    @classmethod
    def normalized(cls, indices: np.ndarray, raw: np.ndarray) -> "WeightDistribution":
        """Normalize a nonnegative vector by explicit division."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.min() < 0.0:
            raise InvalidInputError("negative weight")
        total = raw.sum()
        if not total > 0.0:
            raise InvalidInputError("weights sum to zero")
        return cls(np.asarray(indices, dtype=np.int64), raw / total)

    @classmethod
    def point_mass(cls, indices: np.ndarray, slot: int) -> "WeightDistribution":
        idx = np.asarray(indices, dtype=np.int64)
        w = np.zeros(idx.size)
        w[slot] = 1.0
        return cls(idx, w)

    def __len__(self) -> int:
        return int(self.indices.size)

    def digest(self) -> str:
        h = hashlib.sha1()
        h.update(self.indices.tobytes())
        h.update(self.weights.tobytes())
        return h.hexdigest()

    def point_masses(self) -> tuple[np.ndarray, np.ndarray]:
        """Merge slots that refer to the same domain point."""
        uniq, inverse = np.unique(self.indices, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, self.weights)
        return uniq, merged

    def equals(self, other: "WeightDistribution") -> bool:
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.weights, other.weights
        )


@dataclass(frozen=True)
class Stump:
    """Threshold rule: predict ``polarity`` where feature > threshold, else the opposite."""

    feature: int
    threshold: float
    polarity: int

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        values = features[:, self.feature]
        return np.where(values > self.threshold, self.polarity, -self.polarity).astype(np.int8)


class Hypothesis:
    """A ±1 labeling of the domain: dense vector or threshold stump."""

    __slots__ = ("_labels", "_stump")

    def __init__(self, labels: np.ndarray | None = None, stump: Stump | None = None):
        if (labels is None) == (stump is None):
            raise InvalidInputError("exactly one of labels/stump must be given")
        if labels is not None:
            labels = np.asarray(labels)
            if labels.dtype != np.int8:
                labels = labels.astype(np.int8)
            if not np.all(np.abs(labels) == 1):
                raise InvalidInputError("hypothesis labels must all be +1 or -1")
            if labels.flags.writeable:
                labels = _readonly(labels.copy())
        self._labels = labels
        self._stump = stump

    @classmethod
    def dense(cls, labels: np.ndarray) -> "Hypothesis":
        return cls(labels=labels)

    @classmethod
    def from_stump(cls, stump: Stump) -> "Hypothesis":
        return cls(stump=stump)

    @property
    def is_stump(self) -> bool:
        return self._stump is not None

    @property
    def stump(self) -> Stump | None:
        return self._stump

    @property
    def labels(self) -> np.ndarray | None:
        return self._labels

    def _features_of(self, domain: LabeledDomain) -> np.ndarray:
        if domain.features is None:
            raise InvalidInputError("stump hypothesis needs a domain with features")
        return domain.features

    def evaluate(self, domain: LabeledDomain) -> np.ndarray:
        """Dense ±1 labels over the full domain."""
        if self._labels is not None:
            if self._labels.shape != (domain.size,):
                raise InvalidInputError("dense hypothesis does not cover the domain")
            return self._labels
        return self._stump.evaluate(self._features_of(domain))

    def at(self, domain: LabeledDomain, indices: np.ndarray) -> np.ndarray:
        """±1 labels at the given domain positions."""
        if self._labels is not None:
            return self._labels[indices]
        return self._stump.evaluate(self._features_of(domain)[indices])

    def negated(self) -> "Hypothesis":
        if self._labels is not None:
            return Hypothesis.dense(-self._labels)
        s = self._stump
        return Hypothesis.from_stump(Stump(s.feature, s.threshold, -s.polarity))

    def digest(self, domain: LabeledDomain) -> str:
        return hashlib.sha1(np.ascontiguousarray(self.evaluate(domain)).tobytes()).hexdigest()


@dataclass(frozen=True, eq=False)
class HypothesisClass:
    """Finite ordered list of hypotheses.

    The order is fixed at construction; first-valid and tie-breaking rules
    elsewhere depend on it.
    """

    members: tuple[Hypothesis, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i: int) -> Hypothesis:
        return self.members[i]


def _check_indices(dist: WeightDistribution, domain: LabeledDomain) -> None:
    if dist.indices.max() >= domain.size:
        raise InvalidInputError("distribution index outside the domain")


def empirical_loss(h: Hypothesis, dist: WeightDistribution, domain: LabeledDomain) -> float:
    """Weighted 0-1 loss of h against the domain concept: sum_i w_i * 1[h(x_i) != c(x_i)]."""
    _check_indices(dist, domain)
    mistakes = h.at(domain, dist.indices) != domain.labels[dist.indices]
    return float(np.dot(dist.weights, mistakes))


def advantage(h: Hypothesis, dist: WeightDistribution, domain: LabeledDomain) -> float:
    """1/2 minus the weighted loss; lies in [-1/2, 1/2]."""
    return 0.5 - empirical_loss(h, dist, domain)


def margin(votes: np.ndarray, x: int, domain: LabeledDomain) -> float:
    """c(x) * g(x) for a vote function g given as a full-domain array in [-1, 1]."""
    return float(domain.labels[x] * votes[x])


def margins_at(votes: np.ndarray, indices: np.ndarray, domain: LabeledDomain) -> np.ndarray:
    return domain.labels[indices] * votes[indices]


def _top_plus_tail(sorted_desc: np.ndarray, head: int, tail_factor: float) -> float:
    top = float(sorted_desc[:head].sum())
    tail = math.sqrt(float(np.square(sorted_desc[head:]).sum()))
    return top + tail_factor * tail


def spreadness(dist: WeightDistribution, d: int) -> float:
    """Top-d probability mass plus sqrt(d) times the Euclidean norm of the rest.

    Slots referring to the same domain point are merged before sorting, so
    the value depends only on the distribution over points.
    """
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    _, merged = dist.point_masses()
    ordered = np.sort(merged)[::-1]
    return _top_plus_tail(ordered, d, math.sqrt(d))


def generalized_spreadness(w: np.ndarray, t: float) -> float:
    """Head of floor(t^2) largest entries plus t times the norm of the tail.

    Specializes exactly: generalized_spreadness(w, sqrt(d)) == spreadness for
    a distribution with weight vector w.
    """
    if not t > 0:
        raise InvalidInputError("t must be positive")
    w = np.asarray(w, dtype=np.float64)
    if w.size and w.min() < 0:
        raise InvalidInputError("entries must be nonnegative")
    # Nudged floor: sqrt(d)**2 may land a few ulp under d, and floor would
    # then drop a whole head entry.
    head = int(math.floor(t * t + 1e-9))
    ordered = np.sort(w)[::-1]
    return _top_plus_tail(ordered, head, t)
