"""Seeded random streams for reproducible simulations.

Stream rule: trial ``t`` of a run with base seed ``s`` draws from
``Generator(Philox(SeedSequence(s + t)))``. Philox is counter-based, so a
stream depends only on its seed and never on thread scheduling.
"""

from typing import Optional

import numpy as np

RNG_NAME = "numpy.Philox-4x64"


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Seed of trial ``trial_index`` for a run started at ``base_seed``"""
    return int(base_seed) + int(trial_index)


def get_rng(seed: int) -> np.random.Generator:
    """
    Get a counter-based numpy generator for a seed.

    Args:
        seed: Non-negative integer seed

    Returns:
        numpy Generator instance
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def resolve_seed(cli_seed: Optional[int], env_seed: Optional[int], default: int = 0) -> int:
    """Environment seed wins over the command-line seed, which wins over the default"""
    if env_seed is not None:
        return int(env_seed)
    if cli_seed is not None:
        return int(cli_seed)
    return default
