"""
Closed-loop trajectory record
File: src/envs/trajectory.py
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch

from src.envs.returns import discounted_return


@dataclass
class Trajectory:
    """
    One episode (or segment) of T transitions

    `features` holds the observation vectors of s_0..s_T (T + 1 rows); the torch
    fields are populated during collection and reference the live policy graph.
    """
    start_state: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    gamma: float = 0.99
    features: Optional[np.ndarray] = None
    observations: Optional[np.ndarray] = None
    eps: Optional[np.ndarray] = None
    action_tensors: List[torch.Tensor] = field(default_factory=list)
    log_probs: List[torch.Tensor] = field(default_factory=list)
    values: List[torch.Tensor] = field(default_factory=list)
    terminated: bool = False

    def __post_init__(self):
        if not (len(self.states) == len(self.actions) == len(self.rewards)):
            raise ValueError(
                f"inconsistent trajectory lengths: states={len(self.states)} "
                f"actions={len(self.actions)} rewards={len(self.rewards)}"
            )

    @property
    def length(self) -> int:
        return len(self.rewards)

    @property
    def episodic_return(self) -> float:
        return float(np.sum(self.rewards))

    @property
    def discounted_return(self) -> float:
        return discounted_return(self.rewards, self.gamma)

    def all_states(self) -> np.ndarray:
        """s_0..s_T stacked"""
        return np.vstack([self.start_state[None, :], self.states])
