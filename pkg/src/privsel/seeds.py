"""Deterministic per-trial random stream derivation.

Trial t of a run with a given master seed always gets the same generator,
independent of worker count or execution order: the pair (master_seed, t)
is hashed into a fresh PCG64 state.
"""

from __future__ import annotations

import numpy as np


def trial_generator(master_seed: int, trial: int) -> np.random.Generator:
    """An independent generator for one trial, derived by integer-mixing
    (master_seed, trial) into a seed sequence."""
    seq = np.random.SeedSequence((int(master_seed), int(trial)))
    return np.random.Generator(np.random.PCG64(seq))
