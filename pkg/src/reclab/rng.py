"""Deterministic random stream derivation.

Every stochastic routine draws from a Philox generator keyed by
(master_seed, stream_index).  Streams are independent of worker count and
scheduling order, so aggregating per-stream results in index order gives
bitwise-reproducible output.
"""

from __future__ import annotations

import numpy as np

__all__ = ["seed_stream", "spawn_streams"]


def seed_stream(master_seed: int, index: int = 0) -> np.random.Generator:
    """Generator for stream `index` under `master_seed`."""
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be nonnegative")
    seq = np.random.SeedSequence((int(master_seed), int(index)))
    return np.random.Generator(np.random.Philox(seq))


def spawn_streams(master_seed: int, count: int) -> list[np.random.Generator]:
    """Streams 0..count-1 under `master_seed`, in index order."""
    return [seed_stream(master_seed, i) for i in range(count)]
