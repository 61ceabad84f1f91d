"""
Base classes for analytic environments
File: src/envs/base.py
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.utils.errors import ConfigurationError, UnsupportedEnvironmentError

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class EnvSpec:
    """Static description of an environment (the MDP's shape, not its state)"""
    name: str
    state_dim: int
    action_dim: int
    action_kind: str = CONTINUOUS
    horizon: int = 50
    dt: float = 0.05
    feature_dim: Optional[int] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}", key="horizon")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}", key="dt")
        if self.action_kind not in (CONTINUOUS, DISCRETE):
            raise ConfigurationError(f"unknown action kind {self.action_kind}")

    @property
    def is_discrete(self) -> bool:
        return self.action_kind == DISCRETE

    @property
    def observation_dim(self) -> int:
        """Size of the vector the observation-space pathway works on"""
        return self.feature_dim or self.state_dim


class BaseEnvironment(ABC):
    """Deterministic environment: pure step function plus seeded resets"""

    spec: EnvSpec

    @abstractmethod
    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Sample a start state"""
        pass

    @abstractmethod
    def step(self, state: np.ndarray, action) -> Tuple[np.ndarray, float, bool]:
        """Transition one step. Returns (next_state, reward, terminal)"""
        pass

    @abstractmethod
    def render_points(self, state: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Arena coordinates of the agent and (if any) the goal, for frame rendering"""
        pass

    def features(self, state: np.ndarray) -> np.ndarray:
        """Observation vector used by the observation-space pathway"""
        return np.asarray(state, dtype=np.float64)

    def expert_action(self, state: np.ndarray) -> np.ndarray:
        raise UnsupportedEnvironmentError(f"no scripted expert for {self.spec.name}")

    def clip_action(self, action) -> np.ndarray:
        return np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec.name})"
