"""Seeded random streams.

Every stream is numpy's PCG64 seeded through a SeedSequence. Parallel or
per-trial streams are derived by index (``spawn_key``), so results do not
depend on how work is split between workers.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = f"numpy.random.PCG64/SeedSequence (numpy {np.__version__})"


def seed_sequence(seed: int | np.random.SeedSequence, *keys: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        if not keys:
            return seed
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + keys)
    if int(seed) < 0:
        raise ValueError("seed must be non-negative")
    return np.random.SeedSequence(int(seed), spawn_key=keys)


def make_rng(seed: int | np.random.SeedSequence, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed for sub-task ``keys`` of a run seeded with ``seed``."""
    state = seed_sequence(seed, *keys).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))
