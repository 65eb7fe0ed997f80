"""Deterministic seed derivation.

Every random stream is addressed by a root seed plus a tuple of keys, so
results depend only on (root, keys) and never on scheduling or worker count.
"""

from __future__ import annotations

import zlib

import numpy as np

Key = int | str


def _key_word(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if isinstance(key, (int, np.integer)) and key >= 0:
        return int(key)
    raise ValueError(f"seed keys are nonnegative ints or strings, got {key!r}")


def seed_sequence(root: int, *keys: Key) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root), spawn_key=tuple(_key_word(k) for k in keys))


def rng_for(root: int, *keys: Key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(root, *keys)))
