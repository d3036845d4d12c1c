"""Seed bookkeeping for per-subcarrier noise streams."""

import numpy as np


def noise_streams(seed: int, count: int):
    """Independent generators derived from one master seed, one per subcarrier."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]
