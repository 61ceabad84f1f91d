"""
Torque-limited pendulum swing-up
File: src/envs/pendulum.py
"""
import math
from typing import Optional, Tuple

import numpy as np

from src.envs.base import BaseEnvironment, EnvSpec

GRAVITY = 10.0
MASS = 1.0
LENGTH = 1.0
MAX_TORQUE = 2.0
MAX_SPEED = 8.0
# |theta| below which the expert switches from energy pumping to PD
STABILIZE_ANGLE = 0.6


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]"""
    return float(math.pi - np.mod(math.pi - theta, 2.0 * math.pi))


class PendulumSwingUp(BaseEnvironment):
    """
    State (theta, theta_dot); theta = 0 is upright. Action in [-1, 1] scales to +-2 torque.

    theta_ddot = (3g / 2l) sin(theta) + (3 / m l^2) u
    theta_dot' = clip(theta_dot + dt * theta_ddot, -8, 8)
    theta' = wrap(theta + dt * theta_dot')
    reward = -(theta'^2 + 0.1 theta_dot'^2 + 0.001 u^2)
    """

    def __init__(self, horizon: int = 100, dt: float = 0.05):
        self.spec = EnvSpec(name="PendulumSwingUp", state_dim=2, action_dim=1,
                            horizon=horizon, dt=dt)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        theta = wrap_angle(rng.uniform(-math.pi, math.pi))
        return np.array([theta, rng.uniform(-1.0, 1.0)])

    def step(self, state: np.ndarray, action) -> Tuple[np.ndarray, float, bool]:
        u = MAX_TORQUE * float(self.clip_action(action).reshape(-1)[0])
        theta, theta_dot = float(state[0]), float(state[1])
        theta_ddot = (3.0 * GRAVITY / (2.0 * LENGTH)) * math.sin(theta) \
            + (3.0 / (MASS * LENGTH ** 2)) * u
        theta_dot_next = float(np.clip(theta_dot + self.spec.dt * theta_ddot, -MAX_SPEED, MAX_SPEED))
        theta_next = wrap_angle(theta + self.spec.dt * theta_dot_next)
        reward = -(theta_next ** 2 + 0.1 * theta_dot_next ** 2 + 0.001 * u ** 2)
        return np.array([theta_next, theta_dot_next]), reward, False

    def render_points(self, state: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        theta = float(state[0])
        return np.array([math.sin(theta), math.cos(theta)]), None

    def energy(self, state: np.ndarray) -> float:
        """Zero at rest upright, -30 at rest hanging down"""
        theta, theta_dot = float(state[0]), float(state[1])
        return 0.5 * theta_dot ** 2 + 1.5 * GRAVITY / LENGTH * (math.cos(theta) - 1.0)

    def expert_action(self, state: np.ndarray) -> np.ndarray:
        theta, theta_dot = float(state[0]), float(state[1])
        if abs(theta) < STABILIZE_ANGLE:
            return np.clip(np.array([-2.0 * theta - 0.5 * theta_dot]), -1.0, 1.0)
        # pump energy toward the upright level; kick when at rest
        direction = math.copysign(1.0, theta_dot) if theta_dot != 0.0 else 1.0
        return np.clip(np.array([0.1 * -self.energy(state) * direction]), -1.0, 1.0)
