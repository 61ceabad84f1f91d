"""
Shared test doubles: oracle dynamics, pass-through encoders, tiny fixtures
File: tests/helpers.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import torch
import torch.nn as nn

from src.dynmodel.normalizer import Normalizer
from src.ssm.model import SSMConfig

TINY_SSM = SSMConfig(action_dim=2, frame_stack=2, frame_size=8, channels=3,
                     embed_dim=5, latent_dim=3, state_dim=4, hidden_units=6)


class PointMassOracle(nn.Module):
    """Dynamics double returning the true normalized PointMass2D delta"""

    def __init__(self, norm: Normalizer, dt: float = 0.05):
        super().__init__()
        self.norm = norm
        self.dt = dt
        self.state_dim = 6
        self.action_dim = 2
        self.calls = []

    def forward(self, norm_states, norm_actions):
        self.calls.append(norm_states.detach().clone())
        s = self.norm.states.invert(norm_states)
        a = torch.clamp(self.norm.actions.invert(norm_actions), -1.0, 1.0)
        v_next = s[..., 2:4] + self.dt * a
        p_next = s[..., 0:2] + self.dt * v_next
        delta = torch.cat([p_next - s[..., 0:2], v_next - s[..., 2:4],
                           torch.zeros_like(s[..., 4:6])], dim=-1)
        mean = self.norm.deltas.apply(delta)
        return mean, torch.zeros_like(mean)


class LastState(nn.Module):
    """Sequence encoder double: the encoding is the last state itself"""

    def forward(self, states):
        return states[..., -1, :]


class ParamHolder(nn.Module):
    """Wraps loose tensors as parameters so they can be gradient-checked"""

    def __init__(self, **tensors):
        super().__init__()
        for name, value in tensors.items():
            self.register_parameter(name, nn.Parameter(value.clone().to(torch.float64)))
