"""
Gaussian / categorical policy and state-value function
File: src/dynmodel/policy.py
"""
import math
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn as nn
from torch.distributions import Categorical, Normal

from src.dynmodel.networks import build_mlp
from src.utils.errors import NonFiniteError

MEAN = "mean"
SAMPLE = "sample"
REPARAM = "reparam"
INIT_LOG_STD = math.log(0.5)


class Policy(nn.Module):
    """
    pi_phi(a | s)

    Continuous: MLP mean with a state-independent log-std parameter.
    Discrete: MLP logits.
    """

    fixed_init = ("log_std",)

    def __init__(self, obs_dim: int, action_dim: int, discrete: bool = False):
        super().__init__()
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.discrete = discrete
        self.net = build_mlp(obs_dim, action_dim)
        if not discrete:
            self.log_std = nn.Parameter(torch.full((action_dim,), INIT_LOG_STD, dtype=torch.float64))

    def distribution(self, s: torch.Tensor):
        out = self.net(s)
        if not torch.isfinite(out).all():
            raise NonFiniteError("non-finite policy output", op="policy")
        if self.discrete:
            return Categorical(logits=out, validate_args=False)
        return Normal(out, torch.exp(self.log_std).expand_as(out), validate_args=False)

    def log_prob(self, s: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        dist = self.distribution(s)
        if self.discrete:
            return dist.log_prob(action.long())
        return dist.log_prob(action).sum(-1)

    def entropy(self, s: torch.Tensor) -> torch.Tensor:
        dist = self.distribution(s)
        return dist.entropy() if self.discrete else dist.entropy().sum(-1)


class ValueFunction(nn.Module):
    """V(s), a separate MLP"""

    def __init__(self, obs_dim: int):
        super().__init__()
        self.net = build_mlp(obs_dim, 1)

    def forward(self, s: torch.Tensor) -> torch.Tensor:
        return self.net(s).squeeze(-1)


@dataclass
class PolicyStep:
    action: torch.Tensor
    log_prob: torch.Tensor
    entropy: torch.Tensor
    value: Optional[torch.Tensor] = None
    eps: Optional[torch.Tensor] = None


def policy_act(policy: Policy, s: torch.Tensor, mode: str = SAMPLE,
               value_fn: Optional[ValueFunction] = None, eps: Optional[torch.Tensor] = None,
               generator: Optional[torch.Generator] = None) -> PolicyStep:
    """
    Choose an action for state(s) `s`

    mode "mean": deterministic (mean / argmax). "sample": detached draw.
    "reparam": a = mu + sigma * eps with gradients to phi; `eps` may be supplied.
    The log-probability is always evaluated on the unclipped action.
    """
    dist = policy.distribution(s)
    value = value_fn(s) if value_fn is not None else None

    if policy.discrete:
        if mode == MEAN:
            action = dist.probs.argmax(-1)
        else:
            probs = dist.probs.reshape(-1, policy.action_dim)
            action = torch.multinomial(probs, 1, generator=generator).reshape(dist.probs.shape[:-1])
        return PolicyStep(action=action, log_prob=dist.log_prob(action),
                          entropy=dist.entropy(), value=value)

    mean, std = dist.loc, dist.scale
    if mode == MEAN:
        eps = torch.zeros_like(mean)
        action = mean
    elif mode in (SAMPLE, REPARAM):
        if eps is None:
            eps = torch.randn(mean.shape, generator=generator, dtype=torch.float64)
        action = mean + std * eps
        if mode == SAMPLE:
            action = action.detach()
    else:
        raise ValueError(f"unknown action mode {mode!r}")
    log_prob = dist.log_prob(action.detach()).sum(-1)
    return PolicyStep(action=action, log_prob=log_prob, entropy=dist.entropy().sum(-1),
                      value=value, eps=eps)
