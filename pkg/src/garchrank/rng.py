"""Reproducible, splittable random streams.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by a master seed plus an integer path (sample index,
replicate index, ...).  Streams are independent of scheduling order, so
parallel Monte Carlo runs reproduce the serial results exactly.
"""

from __future__ import annotations

import numpy as np


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the sub-stream identified by ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(v) for v in key))
    return np.random.Generator(np.random.Philox(ss))
