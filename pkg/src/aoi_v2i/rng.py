"""Seeded, splittable random streams.

Every stream is a Philox (counter-based) generator keyed by the master seed
plus a tuple of stream indices, so replication ``r`` / vehicle ``v`` always
sees the same numbers regardless of how many other streams exist.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(
        int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=tuple(int(s) for s in stream)
    )
    return np.random.Generator(np.random.Philox(ss))
