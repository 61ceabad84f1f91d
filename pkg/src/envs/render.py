"""
Grid-frame renderer for pixel-style observations
File: src/envs/render.py
"""
from typing import Sequence, Union

import numpy as np

from src.envs.base import EnvSpec
from src.envs.registry import make_env

FRAME_SIZE = 16
FRAME_STACK = 4
ARENA_HALF_WIDTH = 1.5
AGENT_INTENSITY = 1.0
GOAL_INTENSITY = 0.5


def cell_index(coord, size: int = FRAME_SIZE) -> np.ndarray:
    """clamp(floor((coord + 1.5) / 3 * size), 0, size - 1), per axis"""
    scaled = (np.asarray(coord, dtype=np.float64) + ARENA_HALF_WIDTH) / (2 * ARENA_HALF_WIDTH) * size
    return np.clip(np.floor(scaled), 0, size - 1).astype(np.int64)


def render_frame(spec: Union[EnvSpec, str], state: np.ndarray, size: int = FRAME_SIZE) -> np.ndarray:
    env = make_env(spec if isinstance(spec, str) else spec.name)
    agent, goal = env.render_points(np.asarray(state, dtype=np.float64))
    frame = np.zeros((size, size))
    if goal is not None:
        gx, gy = cell_index(goal, size)
        frame[gx, gy] = GOAL_INTENSITY
    ax, ay = cell_index(agent, size)
    frame[ax, ay] = AGENT_INTENSITY
    return frame


def render_observation(spec: Union[EnvSpec, str], state_history: Sequence[np.ndarray],
                       size: int = FRAME_SIZE, stack: int = FRAME_STACK) -> np.ndarray:
    """
    Stack of the latest `stack` frames, oldest first

    Short histories are padded at the front by repeating the first frame.
    """
    if len(state_history) == 0:
        raise ValueError("render_observation needs at least one state")
    recent = list(state_history[-stack:])
    recent = [recent[0]] * (stack - len(recent)) + recent
    return np.stack([render_frame(spec, s, size) for s in recent])
