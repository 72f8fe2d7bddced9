"""Seeded random streams split by purpose.

Every consumer asks for a stream by ``(seed, purpose)``.  The purpose string
is hashed into the seed sequence, so adding a new purpose never shifts the
draws of an existing one.  The bit generator is numpy's PCG64 (64-bit state
transitions, 128-bit state).
"""
import zlib

import numpy as np

GENERATION = "generation"
SIGNS = "signs"
GRAPH = "graph"
INIT = "init"
SHUFFLE = "shuffle"
NEGATIVES = "negatives"
REINIT = "reinit"
KMEANS = "kmeans"
PERMUTATION = "permutation"


def stream(seed: int, purpose: str, *extra: int) -> np.random.Generator:
    """Return an independent generator for ``purpose`` under ``seed``.

    ``extra`` integers further split the stream (e.g. epoch or restart index).
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(purpose.encode("utf-8"))]
    key.extend(int(x) for x in extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
