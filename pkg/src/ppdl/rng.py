"""Seed handling: every stochastic routine takes a seed or Generator."""
from __future__ import annotations

import numpy as np


def as_generator(rng: int | np.random.Generator) -> np.random.Generator:
    """Accept a 64-bit integer seed or an existing Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if not isinstance(rng, (int, np.integer)):
        raise TypeError(f"rng must be an int seed or Generator, got {type(rng)!r}")
    return np.random.default_rng(int(rng))


def derive_seed(master: int, *path: int) -> int:
    """Deterministic child seed for (master, path) via SeedSequence.

    Used for per-trial seeds in experiment harnesses: same master and trial
    index always give the same child seed, independent of execution order.
    """
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
