"""Deterministic RNG stream derivation for reproducible parallel replicas."""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for a replica identified by key, independent of execution order.

    substream(seed) is the root stream; substream(seed, r) is replica r's
    stream, substream(seed, r, 1) a second stream owned by the same replica.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
