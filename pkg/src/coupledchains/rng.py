"""Seeding discipline: every operation derives its generator from the
master seed plus a fixed stream label, so results never depend on call
order or parallel schedule."""

from __future__ import annotations

import zlib

import numpy as np


def stream_rng(seed: int, *labels) -> np.random.Generator:
    """Generator for (seed, labels): independent streams per label."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for label in labels:
        if isinstance(label, int):
            entropy.append(label & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(str(label).encode()))
    return np.random.default_rng(np.random.SeedSequence(entropy))
