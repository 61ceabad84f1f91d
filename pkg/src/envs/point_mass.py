"""
Point mass moving to a goal in the plane
File: src/envs/point_mass.py
"""
from typing import Optional, Tuple

import numpy as np

from src.envs.base import BaseEnvironment, EnvSpec


class PointMass2D(BaseEnvironment):
    """
    State (p_x, p_y, v_x, v_y, g_x, g_y); action is an acceleration in [-1, 1]^2

    v' = v + dt * a,  p' = p + dt * v'
    reward = -||p' - g||^2 - 0.01 ||a||^2
    """

    def __init__(self, horizon: int = 50, dt: float = 0.05):
        self.spec = EnvSpec(name="PointMass2D", state_dim=6, action_dim=2,
                            horizon=horizon, dt=dt)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        position = rng.uniform(-1.0, 1.0, size=2)
        goal = rng.uniform(-1.0, 1.0, size=2)
        return np.concatenate([position, np.zeros(2), goal])

    def step(self, state: np.ndarray, action) -> Tuple[np.ndarray, float, bool]:
        a = self.clip_action(action)
        p, v, g = state[0:2], state[2:4], state[4:6]
        v_next = v + self.spec.dt * a
        p_next = p + self.spec.dt * v_next
        reward = -float(np.sum((p_next - g) ** 2)) - 0.01 * float(np.sum(a ** 2))
        return np.concatenate([p_next, v_next, g]), reward, False

    def render_points(self, state: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        return state[0:2], state[4:6]

    def expert_action(self, state: np.ndarray) -> np.ndarray:
        p, v, g = state[0:2], state[2:4], state[4:6]
        return np.clip(2.0 * (g - p) - 1.0 * v, -1.0, 1.0)
