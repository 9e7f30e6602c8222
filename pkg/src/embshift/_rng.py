"""Seeded generator construction shared by every randomized operation.

All randomness in this package flows through :func:`generator` so that a
64-bit user seed (possibly negative) plus optional stream indices map to
one reproducible PCG64 stream, identically on every platform.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def generator(*parts: int) -> np.random.Generator:
    """Build a deterministic Generator from integer seed parts.

    Each part is reduced modulo 2**64 so negative seeds are legal. Distinct
    part tuples yield statistically independent streams, which is what the
    per-resample bootstrap contract relies on.
    """
    if not parts:
        raise ValueError("at least one seed part is required")
    entropy = [int(p) & _MASK64 for p in parts]
    return np.random.default_rng(np.random.SeedSequence(entropy))
