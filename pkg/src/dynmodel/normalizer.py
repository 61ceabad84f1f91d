"""
Running input/target normalization for the observation-space model
File: src/dynmodel/normalizer.py
"""
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np
import torch
from loguru import logger

ArrayLike = Union[np.ndarray, torch.Tensor]
NORM_EPS = 1e-8


class RunningStats:
    """Per-dimension running mean / population std; identity until the first update"""

    def __init__(self, dim: int):
        self.dim = dim
        self.mean = torch.zeros(dim, dtype=torch.float64)
        self.std = torch.ones(dim, dtype=torch.float64)
        self.count = 0

    def update(self, batch: ArrayLike):
        data = torch.as_tensor(batch, dtype=torch.float64).detach().reshape(-1, self.dim)
        m = data.shape[0]
        if m == 0:
            if self.count == 0:
                raise ValueError("first normalizer update needs a non-empty batch")
            return
        batch_mean = data.mean(0)
        batch_var = data.var(0, unbiased=False)
        n = self.count
        total = n + m
        delta = batch_mean - self.mean
        var = self.std ** 2 if n else torch.zeros(self.dim, dtype=torch.float64)
        m2 = var * n + batch_var * m + delta ** 2 * (n * m / total)
        self.mean = self.mean + delta * (m / total)
        self.std = torch.sqrt(m2 / total)
        self.count = total

    def apply(self, x: ArrayLike) -> torch.Tensor:
        x = torch.as_tensor(x, dtype=torch.float64)
        return (x - self.mean) / (self.std + NORM_EPS)

    def invert(self, y: ArrayLike) -> torch.Tensor:
        y = torch.as_tensor(y, dtype=torch.float64)
        return y * (self.std + NORM_EPS) + self.mean

    def state_dict(self, prefix: str) -> Dict[str, torch.Tensor]:
        return {
            f"{prefix}.mean": self.mean.clone(),
            f"{prefix}.std": self.std.clone(),
            f"{prefix}.count": torch.tensor([float(self.count)], dtype=torch.float64),
        }

    def load_state_dict(self, tensors: Dict[str, torch.Tensor], prefix: str):
        self.mean = tensors[f"{prefix}.mean"].clone().reshape(self.dim)
        self.std = tensors[f"{prefix}.std"].clone().reshape(self.dim)
        self.count = int(tensors[f"{prefix}.count"].reshape(-1)[0])


@dataclass
class NormalizedBatch:
    states: torch.Tensor
    actions: torch.Tensor
    deltas: torch.Tensor


class Normalizer:
    """Statistics for states, actions and state deltas (s' - s)"""

    def __init__(self, state_dim: int, action_dim: int):
        self.states = RunningStats(state_dim)
        self.actions = RunningStats(action_dim)
        self.deltas = RunningStats(state_dim)

    @property
    def count(self) -> int:
        return self.states.count

    def update(self, states: ArrayLike, actions: ArrayLike, next_states: ArrayLike):
        """Fold in raw closed-loop transitions; imagined states never come through here"""
        states = torch.as_tensor(states, dtype=torch.float64).detach()
        next_states = torch.as_tensor(next_states, dtype=torch.float64).detach()
        self.states.update(states)
        self.actions.update(torch.as_tensor(actions, dtype=torch.float64).detach())
        self.deltas.update(next_states - states)
        logger.debug(f"Normalizer updated: {self.count} samples")

    def apply(self, states: ArrayLike, actions: ArrayLike,
              next_states: ArrayLike) -> NormalizedBatch:
        states = torch.as_tensor(states, dtype=torch.float64)
        next_states = torch.as_tensor(next_states, dtype=torch.float64)
        return NormalizedBatch(
            states=self.states.apply(states),
            actions=self.actions.apply(actions),
            deltas=self.deltas.apply(next_states - states),
        )

    def state_dict(self, prefix: str = "norm") -> Dict[str, torch.Tensor]:
        out = {}
        for name in ("states", "actions", "deltas"):
            out.update(getattr(self, name).state_dict(f"{prefix}.{name}"))
        return out

    def load_state_dict(self, tensors: Dict[str, torch.Tensor], prefix: str = "norm"):
        for name in ("states", "actions", "deltas"):
            getattr(self, name).load_state_dict(tensors, f"{prefix}.{name}")


def normalizer_update_apply(norm: Normalizer, states: ArrayLike, actions: ArrayLike,
                            next_states: ArrayLike) -> NormalizedBatch:
    """Update the running statistics with a raw batch, then normalize it"""
    if norm.count == 0 and len(states) == 0:
        raise ValueError("first normalizer update needs a non-empty batch")
    norm.update(states, actions, next_states)
    return norm.apply(states, actions, next_states)
