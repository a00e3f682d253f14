"""Deterministic seed derivation for nested sampling loops.

Every disorder realization and Monte Carlo worker draws from a stream derived
from (master seed, integer key...), so results do not depend on evaluation
order or worker count.
"""

from __future__ import annotations

import numpy as np


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the sub-stream (master_seed, *key)."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, key)]))


def derive_seed(master_seed: int, *key: int) -> int:
    """Stable integer child seed for the sub-stream (master_seed, *key)."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, key)])
    return int(ss.generate_state(1, np.uint64)[0])
