"""
Environment lookup by name and the pure step/expert entry points
File: src/envs/registry.py
"""
from typing import Dict, Tuple, Union

import numpy as np

from src.envs.base import BaseEnvironment, EnvSpec
from src.envs.grid_nav import DiscreteGridNav
from src.envs.pendulum import PendulumSwingUp
from src.envs.point_mass import PointMass2D
from src.utils.errors import ConfigurationError, UnsupportedEnvironmentError

ENVIRONMENTS = {
    "PointMass2D": PointMass2D,
    "PendulumSwingUp": PendulumSwingUp,
    "DiscreteGridNav": DiscreteGridNav,
}

_instances: Dict[str, BaseEnvironment] = {}


def make_env(name: str) -> BaseEnvironment:
    """Environment instance for `name` (instances are stateless and shared)"""
    if name not in ENVIRONMENTS:
        raise ConfigurationError(
            f"unknown environment {name!r}; expected one of {sorted(ENVIRONMENTS)}", key="env"
        )
    if name not in _instances:
        _instances[name] = ENVIRONMENTS[name]()
    return _instances[name]


def _resolve(spec: Union[EnvSpec, str]) -> BaseEnvironment:
    return make_env(spec if isinstance(spec, str) else spec.name)


def env_step(spec: Union[EnvSpec, str], state: np.ndarray, action,
             t: int = None) -> Tuple[np.ndarray, float, bool]:
    """
    Pure transition: (next_state, reward, done)

    `done` is the environment's own terminal flag, or True when `t` (the index of
    the step being taken, from 0) reaches the horizon.
    """
    env = _resolve(spec)
    next_state, reward, terminal = env.step(np.asarray(state, dtype=np.float64), action)
    done = terminal or (t is not None and t + 1 >= env.spec.horizon)
    return next_state, reward, done


def expert_action(spec: Union[EnvSpec, str], state: np.ndarray) -> np.ndarray:
    """Scripted expert control for continuous environments"""
    env = _resolve(spec)
    if env.spec.is_discrete:
        raise UnsupportedEnvironmentError(
            f"{env.spec.name} has discrete actions; scripted experts are continuous-only"
        )
    return env.expert_action(np.asarray(state, dtype=np.float64))
