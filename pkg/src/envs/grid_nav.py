"""
Discrete navigation on a 5x5 grid
File: src/envs/grid_nav.py
"""
from typing import Optional, Tuple

import numpy as np

from src.envs.base import DISCRETE, BaseEnvironment, EnvSpec

GRID_SIZE = 5
# up, down, left, right as (row, col) offsets
MOVES = np.array([[-1, 0], [1, 0], [0, -1], [0, 1]])
GOAL_REWARD = 1.0
STEP_PENALTY = -0.01


class DiscreteGridNav(BaseEnvironment):
    """State (agent_row, agent_col, goal_row, goal_col); 4 moves clamped at walls"""

    def __init__(self, horizon: int = 30):
        self.spec = EnvSpec(name="DiscreteGridNav", state_dim=4, action_dim=len(MOVES),
                            action_kind=DISCRETE, horizon=horizon, dt=1.0,
                            feature_dim=GRID_SIZE * GRID_SIZE)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        cells = rng.choice(GRID_SIZE * GRID_SIZE, size=2, replace=False)
        agent = divmod(int(cells[0]), GRID_SIZE)
        goal = divmod(int(cells[1]), GRID_SIZE)
        return np.array([*agent, *goal], dtype=np.float64)

    def step(self, state: np.ndarray, action) -> Tuple[np.ndarray, float, bool]:
        move = MOVES[int(action)]
        agent = np.clip(state[0:2] + move, 0, GRID_SIZE - 1)
        goal = state[2:4]
        next_state = np.concatenate([agent, goal]).astype(np.float64)
        if np.array_equal(agent, goal):
            return next_state, GOAL_REWARD, True
        return next_state, STEP_PENALTY, False

    def features(self, state: np.ndarray) -> np.ndarray:
        """Flattened grid: goal cell 0.5, agent cell 1.0"""
        grid = np.zeros((GRID_SIZE, GRID_SIZE))
        grid[int(state[2]), int(state[3])] = 0.5
        grid[int(state[0]), int(state[1])] = 1.0
        return grid.reshape(-1)

    def render_points(self, state: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        # cell centres spread over the [-1.5, 1.5] arena
        to_arena = lambda cell: (cell + 0.5) / GRID_SIZE * 3.0 - 1.5  # noqa: E731
        return to_arena(state[0:2]), to_arena(state[2:4])
