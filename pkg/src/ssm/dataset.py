"""
Expert trajectory dataset: scripted-expert generation and the binary file format
File: src/ssm/dataset.py

Layout (little-endian): b"CONDYN-TRAJ1", trajectory count, frame stack, height,
width, action dim (u32 each); then per trajectory T (u32) followed by
(T + 1) observation stacks, T actions and T rewards as f64.
"""
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import torch
from loguru import logger

from src.diffcore.rng import make_numpy_rng
from src.envs.registry import env_step, expert_action, make_env
from src.envs.render import FRAME_SIZE, FRAME_STACK, render_observation
from src.utils.errors import DatasetError

MAGIC = b"CONDYN-TRAJ1"
_HEADER = struct.Struct("<5I")


@dataclass
class ExpertTrajectory:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    @property
    def length(self) -> int:
        """Number of transitions T"""
        return len(self.actions)

    @property
    def episodic_return(self) -> float:
        return float(np.sum(self.rewards))


class ExpertDataset:
    """Rendered expert trajectories with a fixed observation and action layout"""

    def __init__(self, trajectories: List[ExpertTrajectory], frame_stack: int = FRAME_STACK,
                 height: int = FRAME_SIZE, width: int = FRAME_SIZE, action_dim: int = 2):
        self.trajectories = list(trajectories)
        self.frame_stack = frame_stack
        self.height = height
        self.width = width
        self.action_dim = action_dim
        bad = [i for i, t in enumerate(self.trajectories) if not self._conforms(t)]
        if bad:
            raise DatasetError("trajectory arrays do not match the dataset layout", indices=bad)

    def _conforms(self, traj: ExpertTrajectory) -> bool:
        T = traj.length
        return (traj.observations.shape == (T + 1, self.frame_stack, self.height, self.width)
                and traj.actions.shape == (T, self.action_dim)
                and traj.rewards.shape == (T,))

    def __len__(self) -> int:
        return len(self.trajectories)

    def __getitem__(self, index: int) -> ExpertTrajectory:
        return self.trajectories[index]

    def split(self, heldout: int) -> Tuple["ExpertDataset", "ExpertDataset"]:
        """(training, held-out); the last `heldout` trajectories are held out"""
        if heldout < 0 or heldout >= len(self):
            raise DatasetError(f"cannot hold out {heldout} of {len(self)} trajectories")
        cut = len(self) - heldout
        return self._subset(self.trajectories[:cut]), self._subset(self.trajectories[cut:])

    def _subset(self, trajectories: List[ExpertTrajectory]) -> "ExpertDataset":
        return ExpertDataset(trajectories, self.frame_stack, self.height, self.width, self.action_dim)

    def sample_segments(self, length: int, batch_size: int,
                        generator: torch.Generator) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Random segments of `length` transitions

        Returns:
            observations (B, length + 1, stack, H, W) and actions (B, length, action_dim)
        """
        eligible = [i for i, t in enumerate(self.trajectories) if t.length >= length]
        if not eligible:
            raise DatasetError(f"no trajectory has {length} transitions")
        picks = torch.randint(len(eligible), (batch_size,), generator=generator)
        observations, actions = [], []
        for pick in picks.tolist():
            traj = self.trajectories[eligible[pick]]
            start = int(torch.randint(traj.length - length + 1, (1,), generator=generator))
            observations.append(traj.observations[start:start + length + 1])
            actions.append(traj.actions[start:start + length])
        return torch.as_tensor(np.stack(observations)), torch.as_tensor(np.stack(actions))

    def save(self, path: str):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as handle:
            handle.write(MAGIC)
            handle.write(_HEADER.pack(len(self), self.frame_stack, self.height, self.width,
                                      self.action_dim))
            for traj in self.trajectories:
                handle.write(struct.pack("<I", traj.length))
                for array in (traj.observations, traj.actions, traj.rewards):
                    handle.write(np.ascontiguousarray(array, dtype="<f8").tobytes())
        os.replace(tmp, path)
        logger.info(f"Expert dataset saved: {path} ({len(self)} trajectories)")

    @classmethod
    def load(cls, path: str) -> "ExpertDataset":
        with open(path, "rb") as handle:
            blob = handle.read()
        if not blob.startswith(MAGIC):
            raise DatasetError(f"{path}: missing CONDYN-TRAJ1 header")
        offset = len(MAGIC)
        if len(blob) < offset + _HEADER.size:
            raise DatasetError(f"{path}: truncated header")
        count, stack, height, width, action_dim = _HEADER.unpack_from(blob, offset)
        offset += _HEADER.size
        frame = stack * height * width
        trajectories = []
        for index in range(count):
            if len(blob) < offset + 4:
                raise DatasetError(f"{path}: truncated before trajectory", indices=[index])
            (T,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            sizes = ((T + 1) * frame, T * action_dim, T)
            end = offset + 8 * sum(sizes)
            if len(blob) < end:
                raise DatasetError(f"{path}: truncated trajectory data", indices=[index])
            values = np.frombuffer(blob[offset:end], dtype="<f8").astype(np.float64)
            offset = end
            obs, acts, rews = np.split(values, np.cumsum(sizes)[:-1])
            trajectories.append(ExpertTrajectory(
                observations=obs.reshape(T + 1, stack, height, width),
                actions=acts.reshape(T, action_dim),
                rewards=rews,
            ))
        if offset != len(blob):
            raise DatasetError(f"{path}: {len(blob) - offset} trailing bytes")
        logger.info(f"Expert dataset loaded: {path} ({count} trajectories)")
        return cls(trajectories, stack, height, width, action_dim)


def expert_episode(env_name: str, rng: np.random.Generator, size: int = FRAME_SIZE,
                   stack: int = FRAME_STACK, horizon: Optional[int] = None) -> ExpertTrajectory:
    """Roll the scripted expert for one episode and render every step"""
    env = make_env(env_name)
    horizon = horizon or env.spec.horizon
    state = env.reset(rng)
    history = [state]
    observations = [render_observation(env.spec, history, size, stack)]
    actions, rewards = [], []
    for _ in range(horizon):
        action = expert_action(env.spec, state)
        state, reward, done = env_step(env.spec, state, action)
        history.append(state)
        observations.append(render_observation(env.spec, history, size, stack))
        actions.append(np.asarray(action, dtype=np.float64).reshape(env.spec.action_dim))
        rewards.append(reward)
        if done:
            break
    return ExpertTrajectory(np.stack(observations), np.stack(actions), np.asarray(rewards))


def generate_expert_dataset(env_name: str, episodes: int, seed: int = 0,
                            size: int = FRAME_SIZE, stack: int = FRAME_STACK,
                            horizon: Optional[int] = None) -> ExpertDataset:
    """Expert episodes with per-episode reset streams (seed, "expert-data", i)"""
    if episodes < 1:
        raise DatasetError(f"episode count must be >= 1, got {episodes}")
    env = make_env(env_name)
    logger.info(f"Generating {episodes} expert episodes for {env_name} (seed {seed})")
    trajectories = [
        expert_episode(env_name, make_numpy_rng(seed, "expert-data", i), size, stack, horizon)
        for i in range(episodes)
    ]
    returns = [t.episodic_return for t in trajectories]
    logger.info(f"Expert mean return {np.mean(returns):.3f} over {episodes} episodes")
    return ExpertDataset(trajectories, stack, size, size, env.spec.action_dim)
