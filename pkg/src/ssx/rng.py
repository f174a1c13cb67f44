"""Seeded random streams.

All randomness goes through numpy's Philox generator, a counter-based
bit generator whose output depends only on the seed, so datasets and weight
initialisations are reproducible across platforms.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``seed`` and an optional stream path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))
