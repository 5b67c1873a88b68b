"""Deterministic per-task random streams.

A stream is keyed by ``(master seed, task kind, *indices)`` through
``numpy.random.SeedSequence`` spawn keys, so the numbers a replicate sees
never depend on which worker runs it or in what order.
"""

from __future__ import annotations

import numpy as np

KINDS = {"spectrum": 0, "frequentist": 1, "posterior": 2, "moments": 3, "xi": 4}


def stream(seed: int, kind: str, *indices: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = (KINDS[kind],) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
