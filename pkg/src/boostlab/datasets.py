"""Seeded demo tasks and random hypothesis classes for experiments and tests."""

from __future__ import annotations

import numpy as np

from .core import Hypothesis, HypothesisClass, LabeledDomain, TrainingSet
from .seeding import substream


def diagonal_task(
    m: int, seed: int, margin: float = 0.05, dim: int = 2
) -> tuple[LabeledDomain, TrainingSet]:
    """2m points uniform on the unit square, labeled by the diagonal x0 + x1 > 1.

    Points inside the ``margin`` band around the diagonal are resampled, so
    single stumps stay genuinely weak while boosted stumps can separate the
    classes.  Training set is the first m points; the rest serve as held-out
    data.
    """
    rng = substream(seed, "diagonal")
    size = 2 * m
    features = rng.random((size, dim))
    if margin > 0.0:
        while True:
            score = features[:, 0] + features[:, 1] - 1.0
            bad = np.abs(score) < margin
            if not bad.any():
                break
            features[bad] = rng.random((int(bad.sum()), dim))
    labels = np.where(features[:, 0] + features[:, 1] > 1.0, 1, -1).astype(np.int8)
    domain = LabeledDomain(labels, m, features=features)
    return domain, TrainingSet(np.arange(m, dtype=np.int64))


def random_labels_task(m: int, seed: int) -> tuple[LabeledDomain, TrainingSet]:
    """Abstract 2m-point domain with a uniformly random concept; train on the first m."""
    rng = substream(seed, "labels")
    labels = (rng.integers(0, 2, size=2 * m, dtype=np.int8) * 2 - 1).astype(np.int8)
    domain = LabeledDomain(labels, m)
    return domain, TrainingSet(np.arange(m, dtype=np.int64))


def random_hypothesis_class(
    domain: LabeledDomain, size: int, seed: int, include_concept: bool = False
) -> HypothesisClass:
    """``size`` uniformly random dense hypotheses; optionally the concept first."""
    rng = substream(seed, "class")
    members = []
    if include_concept:
        members.append(Hypothesis.dense(domain.labels))
    draws = rng.integers(0, 2, size=(size, domain.size), dtype=np.int8) * 2 - 1
    members.extend(Hypothesis.dense(row) for row in draws)
    return HypothesisClass(tuple(members))
