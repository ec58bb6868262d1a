"""Deterministic, splittable random streams.

Every stochastic component draws from its own counter-based stream keyed by
(master seed, path), so results never depend on worker count or scheduling
order. Philox is used as the bit generator because its streams are cheap to
derive and stable across platforms.
"""
from __future__ import annotations

import numpy as np

# Stream namespace tags. Fixed forever; changing them changes every seeded run.
TAG_INIT = 0
TAG_DECOMPOSE = 1
TAG_QAOA = 2
TAG_ANNEAL = 3
TAG_PROBLEM = 4
TAG_FM = 5


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for one (seed, path) cell of the stream tree."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed_or_rng) -> np.random.Generator:
    """Accept an int seed or an existing Generator; return a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed_or_rng))))


def derived_seed(*parts: int) -> int:
    """Collapse integer parts into one reproducible 63-bit seed."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)
