"""Deterministic random-stream derivation.

Every random draw in the package comes from a counter-based Philox bit
generator keyed through :class:`numpy.random.SeedSequence`, so a (seed,
key-path) pair produces the same stream on every platform and independently
of evaluation order. Parallel code derives one substream per work item
instead of sharing a sequential generator.
"""

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator on an independent Philox substream for ``(seed, *key)``."""
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Derive a 64-bit child seed from a master seed and an index path."""
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])
