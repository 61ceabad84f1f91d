"""
Behavior-cloning loss on expert state/action pairs
File: src/trainers/imitation.py
"""
import torch

from src.dynmodel.policy import Policy
from src.utils.errors import ShapeError


def imitation_loss(policy: Policy, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
    """Mean over steps of -log pi(a^E_t | s_t)"""
    if states.shape[:-1] != actions.shape[:-1]:
        raise ShapeError("imitation_loss", states=states.shape, actions=actions.shape)
    return -policy.log_prob(states, actions).mean()
