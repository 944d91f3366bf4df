"""Per-purpose random streams split from one root seed.

Every stream is ``Philox`` keyed by ``SeedSequence(root, spawn_key=(purpose, *counters))``,
so e.g. the training draws of epoch 17 do not depend on how many numbers any
other stream consumed.
"""
from __future__ import annotations

import numpy as np

PURPOSES = {
    "data": 0,
    "init": 1,
    "train": 2,
    "sample": 3,
    "eval": 4,
    "heldout": 5,
    "oracle": 6,
    "bank": 7,
}


def derive_rng(seed: int, purpose: str, *counters: int) -> np.random.Generator:
    if purpose not in PURPOSES:
        raise KeyError(f"unknown rng purpose {purpose!r}")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    key = (PURPOSES[purpose],) + tuple(int(c) for c in counters)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def describe(seed: int, purpose: str, *counters: int) -> str:
    """Human-readable stream id, written next to outputs."""
    key = ",".join(str(c) for c in (PURPOSES[purpose],) + counters)
    return f"philox(seed={seed}, spawn_key=({key}))"
