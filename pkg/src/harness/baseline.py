"""
Random-policy reference return for an environment
File: src/harness/baseline.py
"""
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np
from loguru import logger

from src.diffcore.rng import make_numpy_rng
from src.envs.registry import env_step, make_env
from src.utils.errors import ConfigurationError


@dataclass
class BaselineResult:
    env: str
    episodes: int
    seed: int
    mean_return: float
    std_return: float

    def to_dict(self) -> Dict:
        return asdict(self)


def random_action(spec, rng: np.random.Generator):
    """Uniform action: a move index for discrete envs, a point in [-1, 1]^d otherwise"""
    if spec.is_discrete:
        return int(rng.integers(spec.action_dim))
    return rng.uniform(-1.0, 1.0, size=spec.action_dim)


def random_policy_return(env_name: str, episodes: int = 100, seed: int = 0) -> BaselineResult:
    """Mean undiscounted return of uniform random actions over full episodes"""
    if episodes < 1:
        raise ConfigurationError(f"episode count must be >= 1, got {episodes}", key="episodes")
    env = make_env(env_name)
    returns = []
    for i in range(episodes):
        rng = make_numpy_rng(seed, "random-policy", i)
        state = env.reset(rng)
        total = 0.0
        for t in range(env.spec.horizon):
            state, reward, done = env_step(env.spec, state, random_action(env.spec, rng), t)
            total += reward
            if done:
                break
        returns.append(total)
    result = BaselineResult(env_name, episodes, seed,
                            float(np.mean(returns)), float(np.std(returns)))
    logger.info(f"Random policy on {env_name}: mean return {result.mean_return:.4f} "
                f"(std {result.std_return:.4f}, {episodes} episodes)")
    return result
