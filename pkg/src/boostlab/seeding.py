"""Deterministic random-stream derivation.

Every source of randomness in the package is a named substream of a single
master seed.  Substreams are addressed by a path of ints and strings, so
drawing order never depends on scheduling: the stream for (seed, "bag", k, q)
is the same whether slot q is sampled first or last, and adding repetitions
to an experiment never perturbs the streams of earlier repetitions.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _component(part: int | str) -> int:
    if isinstance(part, str):
        h = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(h[:8], "little")
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    raise TypeError(f"seed path components must be int or str, got {type(part)!r}")


def seed_sequence(master: int, *path: int | str) -> np.random.SeedSequence:
    entropy = [_component(master)] + [_component(p) for p in path]
    return np.random.SeedSequence(entropy)


def substream(master: int, *path: int | str) -> np.random.Generator:
    """Generator for the substream addressed by (master, *path)."""
    return np.random.default_rng(seed_sequence(master, *path))


def derive_seed(master: int, *path: int | str) -> int:
    """A 64-bit integer seed derived from (master, *path).

    Used where an API wants a plain seed (e.g. per-repetition seeds in the
    experiment harness) rather than a generator.
    """
    state = seed_sequence(master, *path).generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])
