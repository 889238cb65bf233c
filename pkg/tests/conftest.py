import numpy as np
import pytest

from boostlab.core import Hypothesis, HypothesisClass, LabeledDomain, TrainingSet


def random_domain(m: int, rng: np.random.Generator) -> LabeledDomain:
    labels = rng.integers(0, 2, size=2 * m, dtype=np.int8) * 2 - 1
    return LabeledDomain(labels.astype(np.int8), m)


def random_dense(domain: LabeledDomain, rng: np.random.Generator) -> Hypothesis:
    labels = rng.integers(0, 2, size=domain.size, dtype=np.int8) * 2 - 1
    return Hypothesis.dense(labels.astype(np.int8))


def random_class(domain: LabeledDomain, size: int, rng: np.random.Generator) -> HypothesisClass:
    return HypothesisClass(tuple(random_dense(domain, rng) for _ in range(size)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def small_domain(rng):
    return random_domain(16, rng)


@pytest.fixture
def small_training(small_domain):
    return TrainingSet(np.arange(small_domain.m, dtype=np.int64))
