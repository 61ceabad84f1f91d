"""
Latent state-space model: observation encoder, prior/posterior latents,
LSTM transition and Gaussian pixel decoder
File: src/ssm/model.py
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn
from loguru import logger

from src.diffcore.cells import LSTMCell, lstm_cell
from src.diffcore.distributions import clamp_log_var, gaussian_diag_nll
from src.utils.errors import ShapeError

PRIOR = "prior"
POSTERIOR = "posterior"
MEAN = "mean"
SAMPLE = "sample"


@dataclass(frozen=True)
class SSMConfig:
    """Model dimensions; defaults match 4x16x16 rendered observations"""
    action_dim: int = 2
    frame_stack: int = 4
    frame_size: int = 16
    channels: int = 16
    embed_dim: int = 32
    latent_dim: int = 8
    state_dim: int = 32
    hidden_units: int = 64

    def __post_init__(self):
        if self.frame_size % 4 != 0:
            raise ValueError(f"frame_size must be divisible by 4, got {self.frame_size}")

    @property
    def observation_shape(self) -> Tuple[int, int, int]:
        return (self.frame_stack, self.frame_size, self.frame_size)

    @property
    def pixels(self) -> int:
        return self.frame_stack * self.frame_size * self.frame_size

    @property
    def feature_size(self) -> int:
        """Spatial side after the two stride-2 convolutions"""
        return self.frame_size // 4

    def to_dict(self):
        return {
            "action_dim": self.action_dim,
            "frame_stack": self.frame_stack,
            "frame_size": self.frame_size,
            "channels": self.channels,
            "embed_dim": self.embed_dim,
            "latent_dim": self.latent_dim,
            "state_dim": self.state_dim,
            "hidden_units": self.hidden_units,
        }


class ObsEncoder(nn.Module):
    """e(o): two 4x4 stride-2 convolutions, then a dense layer"""

    def __init__(self, config: SSMConfig):
        super().__init__()
        self.config = config
        side = config.feature_size
        self.conv = nn.Sequential(
            nn.Conv2d(config.frame_stack, config.channels, 4, stride=2, padding=1),
            nn.Tanh(),
            nn.Conv2d(config.channels, config.channels, 4, stride=2, padding=1),
            nn.Tanh(),
        )
        self.dense = nn.Linear(config.channels * side * side, config.embed_dim)

    def forward(self, o: torch.Tensor) -> torch.Tensor:
        return self.dense(self.conv(o).flatten(1))


class LatentNet(nn.Module):
    """Diagonal Gaussian over z from concatenated inputs (one hidden layer)"""

    def __init__(self, input_dim: int, latent_dim: int, hidden_units: int):
        super().__init__()
        self.latent_dim = latent_dim
        self.net = nn.Sequential(
            nn.Linear(input_dim, hidden_units),
            nn.Tanh(),
            nn.Linear(hidden_units, 2 * latent_dim),
        )

    def forward(self, x: torch.Tensor):
        mean, log_var = self.net(x).split(self.latent_dim, dim=-1)
        return mean, clamp_log_var(log_var)


class TransitionLSTM(nn.Module):
    """s_t = LSTM([z_t, a_{t-1}], s_{t-1}) with its cell state carried alongside"""

    def __init__(self, config: SSMConfig):
        super().__init__()
        self.cell = LSTMCell(config.latent_dim + config.action_dim, config.state_dim)


class Decoder(nn.Module):
    """p(o | s, z): per-pixel mean and one shared learned log-variance"""

    fixed_init = ("log_var",)

    def __init__(self, config: SSMConfig):
        super().__init__()
        self.config = config
        side = config.feature_size
        self.dense = nn.Linear(config.state_dim + config.latent_dim, config.channels * side * side)
        self.deconv = nn.Sequential(
            nn.Tanh(),
            nn.ConvTranspose2d(config.channels, config.channels, 4, stride=2, padding=1),
            nn.Tanh(),
            nn.ConvTranspose2d(config.channels, config.frame_stack, 4, stride=2, padding=1),
        )
        self.log_var = nn.Parameter(torch.zeros(1, dtype=torch.float64))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        side = self.config.feature_size
        hidden = self.dense(x).reshape(-1, self.config.channels, side, side)
        return self.deconv(hidden)


class StateSpaceModel(nn.Module):
    """
    Container for the five parameter groups

    Submodule names give the snapshot prefixes ssm.enc / ssm.prior / ssm.post /
    ssm.trans / ssm.dec when registered under the "ssm" group of a ParameterSet.
    """

    def __init__(self, config: Optional[SSMConfig] = None):
        super().__init__()
        self.config = config or SSMConfig()
        c = self.config
        self.enc = ObsEncoder(c)
        self.prior = LatentNet(c.state_dim + c.action_dim, c.latent_dim, c.hidden_units)
        self.post = LatentNet(c.embed_dim + c.state_dim + c.action_dim, c.latent_dim, c.hidden_units)
        self.trans = TransitionLSTM(c)
        self.dec = Decoder(c)
        logger.info(f"StateSpaceModel initialized: {c.to_dict()}")


def _flatten_leading(x: torch.Tensor, trailing: int):
    lead = x.shape[:-trailing]
    return x.reshape((-1,) + tuple(x.shape[-trailing:])), lead


def encode_obs(encoder: ObsEncoder, o: torch.Tensor) -> torch.Tensor:
    """(..., stack, H, W) -> (..., embed_dim)"""
    expected = encoder.config.observation_shape
    if o.dim() < 3 or tuple(o.shape[-3:]) != expected:
        raise ShapeError("encode_obs", o=o.shape, expected=expected)
    flat, lead = _flatten_leading(o, 3)
    return encoder(flat).reshape(tuple(lead) + (encoder.config.embed_dim,))


def latent_params(model: StateSpaceModel, mode: str, s_prev: torch.Tensor, a_prev: torch.Tensor,
                  embedding: Optional[torch.Tensor] = None):
    """
    (mu_z, log_var_z) of the prior p(z | s, a) or the posterior q(z | e(o), s, a)
    """
    if s_prev.shape[:-1] != a_prev.shape[:-1]:
        raise ShapeError("latent_params", s_prev=s_prev.shape, a_prev=a_prev.shape)
    if mode == PRIOR:
        return model.prior(torch.cat([s_prev, a_prev], dim=-1))
    if mode == POSTERIOR:
        if embedding is None:
            raise ValueError("posterior latents need an observation embedding")
        if embedding.shape[:-1] != s_prev.shape[:-1]:
            raise ShapeError("latent_params", embedding=embedding.shape, s_prev=s_prev.shape)
        return model.post(torch.cat([embedding, s_prev, a_prev], dim=-1))
    raise ValueError(f"unknown latent mode {mode!r}")


def sample_latent(mean: torch.Tensor, log_var: torch.Tensor, latent_mode: str = SAMPLE,
                  generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """Reparameterized z = mu + sigma * eps, or mu in "mean" mode"""
    if latent_mode == MEAN:
        return mean
    if latent_mode != SAMPLE:
        raise ValueError(f"unknown latent mode {latent_mode!r}")
    eps = torch.randn(mean.shape, generator=generator, dtype=torch.float64)
    return mean + torch.exp(0.5 * log_var) * eps


def transition_step(lstm: TransitionLSTM, z: torch.Tensor, s_prev: torch.Tensor,
                    a_prev: torch.Tensor, c_prev: Optional[torch.Tensor] = None):
    """One LSTM step; returns (s_next, c_next)"""
    if z.shape[:-1] != a_prev.shape[:-1]:
        raise ShapeError("transition_step", z=z.shape, a_prev=a_prev.shape)
    if c_prev is None:
        c_prev = torch.zeros_like(s_prev)
    return lstm_cell(torch.cat([z, a_prev], dim=-1), s_prev, c_prev, lstm.cell)


def decode_obs(decoder: Decoder, s: torch.Tensor, z: torch.Tensor):
    """Per-pixel Gaussian mean (..., stack, H, W) and the shared clamped log-variance"""
    if s.shape[:-1] != z.shape[:-1]:
        raise ShapeError("decode_obs", s=s.shape, z=z.shape)
    flat, lead = _flatten_leading(torch.cat([s, z], dim=-1), 1)
    mean = decoder(flat).reshape(tuple(lead) + decoder.config.observation_shape)
    return mean, clamp_log_var(decoder.log_var)


def decode_nll(decoder: Decoder, s: torch.Tensor, z: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """-log p(target | s, z), summed over pixels; one value per leading index"""
    mean, log_var = decode_obs(decoder, s, z)
    if target.shape != mean.shape:
        raise ShapeError("decode_nll", target=target.shape, mean=mean.shape)
    return gaussian_diag_nll(target.flatten(-3), mean.flatten(-3), log_var)
