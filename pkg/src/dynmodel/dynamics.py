"""
Gaussian MLP dynamics over normalized state deltas
File: src/dynmodel/dynamics.py
"""
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.diffcore.distributions import clamp_log_var, gaussian_diag_nll
from src.dynmodel.networks import build_mlp
from src.dynmodel.normalizer import Normalizer
from src.utils.errors import NonFiniteError

MEAN = "mean"
SAMPLE = "sample"


class DynamicsModel(nn.Module):
    """(normalized s, normalized a) -> (mu, log_var) of the normalized delta"""

    def __init__(self, state_dim: int, action_dim: int):
        super().__init__()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.net = build_mlp(state_dim + action_dim, 2 * state_dim)

    def forward(self, norm_states: torch.Tensor, norm_actions: torch.Tensor):
        out = self.net(torch.cat([norm_states, norm_actions], dim=-1))
        mean, log_var = out.split(self.state_dim, dim=-1)
        return mean, clamp_log_var(log_var)


@dataclass
class DeltaPrediction:
    """Prediction for one transition; next_state = s + invert(mean) in mean mode"""
    mean: torch.Tensor
    log_var: torch.Tensor
    next_state: torch.Tensor


def encode_action(action: torch.Tensor, discrete: bool, n_actions: int) -> torch.Tensor:
    """Model-side action: clipped to [-1, 1] for boxes, one-hot for discrete"""
    if discrete:
        return F.one_hot(action.long(), n_actions).to(torch.float64)
    return torch.clamp(action, -1.0, 1.0)


def predict_delta(model: DynamicsModel, norm: Normalizer, s: torch.Tensor, a: torch.Tensor,
                  mode: str = MEAN, generator: Optional[torch.Generator] = None,
                  step: Optional[int] = None) -> DeltaPrediction:
    """
    Imagine the next state s + denormalized delta

    Args:
        s, a: raw state and model-side action, (..., d)
        mode: "mean" (deterministic) or "sample" (diagonal Gaussian draw from `generator`)
        step: step index reported if the prediction is not finite
    """
    mean, log_var = model(norm.states.apply(s), norm.actions.apply(a))
    delta = mean
    if mode == SAMPLE:
        noise = torch.randn(mean.shape, generator=generator, dtype=torch.float64)
        delta = mean + torch.exp(0.5 * log_var) * noise
    elif mode != MEAN:
        raise ValueError(f"unknown prediction mode {mode!r}")
    next_state = s + norm.deltas.invert(delta)
    if not torch.isfinite(next_state).all():
        raise NonFiniteError(f"non-finite dynamics prediction at step {step}",
                             op="predict_delta", step=step)
    return DeltaPrediction(mean=mean, log_var=log_var, next_state=next_state)


def dynamics_nll(model: DynamicsModel, norm: Normalizer, states: torch.Tensor,
                 actions: torch.Tensor, next_states: torch.Tensor) -> torch.Tensor:
    """Mean over the batch of the Gaussian NLL of the normalized observed delta"""
    target = norm.deltas.apply(next_states - states)
    mean, log_var = model(norm.states.apply(states), norm.actions.apply(actions))
    return gaussian_diag_nll(target, mean, log_var).mean()
