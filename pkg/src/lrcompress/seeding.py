"""Deterministic random-number plumbing.

All randomness flows through counter-based Philox generators keyed by
explicit seeds, so oracles and compressions are reproducible and safe to
evaluate from concurrent workers.
"""

import numpy as np

__all__ = ["make_rng", "block_seed", "initial_column_block"]


def make_rng(seed):
    """Philox generator for an integer seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def block_seed(master_seed, block_id):
    """Independent child seed for one block of a partitioned computation."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(block_id,))
    return int(ss.generate_state(1)[0])


def initial_column_block(rng, n, d):
    # Shared by the plain and blocked compressors so that block size 1
    # reproduces the same starting column for the same seed.
    return np.asarray(rng.choice(n, size=min(d, n), replace=False))
