"""
Discounted return helpers
File: src/envs/returns.py
"""
from typing import Sequence

import numpy as np

from src.utils.errors import ConfigurationError


def _check_gamma(gamma: float):
    if not 0.0 <= gamma < 1.0:
        raise ConfigurationError(f"discount must be in [0, 1), got {gamma}", key="gamma")


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """sum_t gamma^t r_t"""
    _check_gamma(gamma)
    total = 0.0
    for reward in reversed(list(rewards)):
        total = float(reward) + gamma * total
    return total


def returns_to_go(rewards: Sequence[float], gamma: float) -> np.ndarray:
    """R_t = sum_{t' >= t} gamma^(t'-t) r_t' for every t"""
    _check_gamma(gamma)
    out = np.zeros(len(rewards))
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = float(rewards[t]) + gamma * running
        out[t] = running
    return out
