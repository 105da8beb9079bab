"""Deterministic named RNG streams derived from one master seed.

Every source of randomness in a run (scheduling, datapoint subsampling,
problem construction, ...) pulls from its own named stream so that adding
or removing draws in one component never perturbs another.  Streams are
keyed by (master_seed, name...) through numpy's SeedSequence spawn keys,
which gives statistically independent generators that are reproducible
across platforms.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(master_seed: int, *names: int | str) -> np.random.Generator:
    """Return the generator for the stream labelled by ``names``.

    String labels are hashed (crc32) into the spawn key; integer labels are
    used directly and must be non-negative.  The same (seed, labels) pair
    always yields an identical generator.
    """
    key = []
    for name in names:
        if isinstance(name, str):
            key.append(zlib.crc32(name.encode("utf-8")))
        else:
            value = int(name)
            if value < 0:
                raise ValueError(f"stream labels must be non-negative, got {value}")
            key.append(value)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(key))
    return np.random.default_rng(seq)
