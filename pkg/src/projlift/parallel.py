"""Seed derivation and deterministic repetition mapping.

Statistical estimators take an integer seed, never a shared Generator:
repetition r uses the generator spawned from ``(seed, r)``, and results are
reduced in repetition order.  The aggregate is therefore byte-identical for
any worker-pool size, including the sequential path.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_threads = 1


def set_threads(k: int) -> None:
    global _threads
    _threads = max(1, int(k))


def get_threads() -> int:
    return _threads


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the derivation path (seed, key...)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    )


def child_seed(seed: int, *key: int) -> int:
    """A derived integer seed, for estimators nested inside estimators."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, dtype=np.uint64)[0])


def rep_map(fn, reps: int, seed: int) -> list:
    """Evaluate ``fn(rng)`` on ``reps`` independently seeded generators.

    Results come back ordered by repetition index regardless of how many
    worker threads execute them.
    """
    rngs = [spawn_rng(seed, r) for r in range(reps)]
    if _threads <= 1 or reps <= 1:
        return [fn(rng) for rng in rngs]
    with ThreadPoolExecutor(max_workers=min(_threads, reps)) as pool:
        futures = [pool.submit(fn, rng) for rng in rngs]
        return [f.result() for f in futures]
