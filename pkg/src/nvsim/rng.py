"""Deterministic seed splitting for parallel sweeps and per-shot sampling.

Every stochastic component draws from a stream addressed by
(master_seed, *path).  Streams with different paths are statistically
independent, and a stream's draws never depend on execution order or
thread count, so results are bit-reproducible under any parallelism.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    # spawn_key entries must be uint32; hash strings stably (crc32, not hash())
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    part = int(part)
    if part < 0:
        raise ValueError(f"stream path components must be nonnegative, got {part}")
    return part & 0xFFFFFFFF


def seed_for(master_seed: int, *path) -> np.random.SeedSequence:
    """SeedSequence for the stream addressed by (master_seed, *path)."""
    return np.random.SeedSequence(entropy=int(master_seed),
                                  spawn_key=tuple(_key(p) for p in path))


def stream(master_seed: int, *path) -> np.random.Generator:
    """Independent Generator for the given stream address."""
    return np.random.default_rng(seed_for(master_seed, *path))
