"""
Closed-loop filtering (ELBO), prior-driven open-loop generation and the
imagination log-likelihood metric
File: src/ssm/inference.py
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch
from loguru import logger

from src.diffcore.distributions import LOG_2PI, gaussian_kl
from src.ssm.model import (
    MEAN, POSTERIOR, PRIOR, SAMPLE, StateSpaceModel, decode_nll, decode_obs, encode_obs,
    latent_params, sample_latent, transition_step,
)
from src.utils.errors import DatasetError, DivergenceError, NonFiniteError


@dataclass
class ElboResult:
    """
    loss: mean over the batch of sum_t [reconstruction NLL + KL(q_t || p_t)]
    states: filtered s_1..s_T, (..., T, state_dim)
    initial_state / initial_cell: s_0 and its LSTM cell, filtered from o_0
    """
    loss: torch.Tensor
    reconstruction: torch.Tensor
    kl: torch.Tensor
    states: torch.Tensor
    initial_state: torch.Tensor
    initial_cell: torch.Tensor

    def policy_states(self) -> torch.Tensor:
        """s_0..s_{T-1}, the states each recorded action was taken from"""
        return torch.cat([self.initial_state.unsqueeze(-2), self.states[..., :-1, :]], dim=-2)


@dataclass
class OpenLoopResult:
    states: torch.Tensor
    latents: torch.Tensor
    observation_means: Optional[torch.Tensor] = None


def initial_state(model: StateSpaceModel, o0: torch.Tensor):
    """(s_0, c_0): one transition from zeros driven by the posterior mean for o_0"""
    c = model.config
    lead = o0.shape[:-3]
    zeros_s = torch.zeros(tuple(lead) + (c.state_dim,), dtype=torch.float64)
    zeros_a = torch.zeros(tuple(lead) + (c.action_dim,), dtype=torch.float64)
    mean, _ = latent_params(model, POSTERIOR, zeros_s, zeros_a, encode_obs(model.enc, o0))
    return transition_step(model.trans, mean, zeros_s, zeros_a, torch.zeros_like(zeros_s))


def sequence_elbo(model: StateSpaceModel, observations: torch.Tensor, actions: torch.Tensor,
                  generator: Optional[torch.Generator] = None,
                  latent_mode: str = SAMPLE) -> ElboResult:
    """
    Negative ELBO of o_1..o_T given o_0 and a_0..a_{T-1}

    observations: (..., T + 1, stack, H, W); actions: (..., T, action_dim)
    At step t the posterior reads e(o_t), s_t = f(z_t, s_{t-1}, a_{t-1}) and
    the decoder scores o_t.
    """
    T = actions.shape[-2]
    if T < 1 or observations.shape[-4] != T + 1:
        raise ValueError(f"sequence_elbo needs T >= 1 actions and T + 1 observations, got "
                         f"{tuple(actions.shape)} / {tuple(observations.shape)}")
    s, cell = initial_state(model, observations[..., 0, :, :, :])
    s0, c0 = s, cell
    embeddings = encode_obs(model.enc, observations[..., 1:, :, :, :])

    states, recon_terms, kl_terms = [], [], []
    for t in range(1, T + 1):
        a_prev = actions[..., t - 1, :]
        mean_q, log_var_q = latent_params(model, POSTERIOR, s, a_prev, embeddings[..., t - 1, :])
        mean_p, log_var_p = latent_params(model, PRIOR, s, a_prev)
        z = sample_latent(mean_q, log_var_q, latent_mode, generator)
        s, cell = transition_step(model.trans, z, s, a_prev, cell)
        recon = decode_nll(model.dec, s, z, observations[..., t, :, :, :])
        kl = gaussian_kl(mean_q, log_var_q, mean_p, log_var_p)
        if not (torch.isfinite(recon).all() and torch.isfinite(kl).all()):
            logger.error(f"Non-finite ELBO term at t={t}")
            raise NonFiniteError(f"non-finite ELBO term at t={t}", op="sequence_elbo", step=t)
        states.append(s)
        recon_terms.append(recon)
        kl_terms.append(kl)

    reconstruction = torch.stack(recon_terms, dim=-1).sum(-1).mean()
    kl_total = torch.stack(kl_terms, dim=-1).sum(-1).mean()
    return ElboResult(
        loss=reconstruction + kl_total,
        reconstruction=reconstruction,
        kl=kl_total,
        states=torch.stack(states, dim=-2),
        initial_state=s0,
        initial_cell=c0,
    )


def open_loop_generate(model: StateSpaceModel, s0: torch.Tensor, actions: torch.Tensor,
                       latent_mode: str = SAMPLE, generator: Optional[torch.Generator] = None,
                       c0: Optional[torch.Tensor] = None, decode: bool = False) -> OpenLoopResult:
    """
    Imagined s^I_1..s^I_k from the prior only; no observation is read

    actions: (..., k, action_dim) replayed from the recorded segment.
    """
    s = s0
    cell = c0 if c0 is not None else torch.zeros_like(s0)
    states, latents, means = [], [], []
    for t in range(actions.shape[-2]):
        a_prev = actions[..., t, :]
        mean_p, log_var_p = latent_params(model, PRIOR, s, a_prev)
        z = sample_latent(mean_p, log_var_p, latent_mode, generator)
        s, cell = transition_step(model.trans, z, s, a_prev, cell)
        if not torch.isfinite(s).all():
            logger.error(f"Open-loop generation diverged at step {t + 1}")
            raise DivergenceError("non-finite imagined latent state", step=t + 1)
        states.append(s)
        latents.append(z)
        if decode:
            means.append(decode_obs(model.dec, s, z)[0])
    return OpenLoopResult(
        states=torch.stack(states, dim=-2),
        latents=torch.stack(latents, dim=-2),
        observation_means=torch.stack(means, dim=-4) if decode else None,
    )


def imagination_log_likelihood(model: StateSpaceModel, trajectories: Sequence, k: int,
                               generator: Optional[torch.Generator] = None,
                               latent_mode: str = SAMPLE) -> float:
    """
    Mean over trajectories and steps t = 1..k of log p(o_t | s^I_t, z_t)

    s_0 is filtered from o_0 through the posterior; every later state comes
    from prior-driven generation with the recorded actions.
    """
    if k < 1:
        raise ValueError(f"imagination horizon must be >= 1, got {k}")
    short = [i for i, traj in enumerate(trajectories) if traj.length < k]
    if short:
        raise DatasetError(f"trajectories need at least {k + 1} observations", indices=short)
    if not trajectories:
        raise DatasetError("no trajectories to evaluate")

    observations = torch.as_tensor(np.stack([t.observations[:k + 1] for t in trajectories]))
    actions = torch.as_tensor(np.stack([t.actions[:k] for t in trajectories]))
    with torch.no_grad():
        s0, c0 = initial_state(model, observations[:, 0])
        rollout = open_loop_generate(model, s0, actions, latent_mode, generator, c0=c0)
        nll = decode_nll(model.dec, rollout.states, rollout.latents, observations[:, 1:])
    value = -float(nll.mean())
    logger.debug(f"Imagination log-likelihood over {len(trajectories)} trajectories, k={k}: {value:.4f}")
    return value


def mean_image_nll(trajectories: Sequence, steps: int = 1) -> float:
    """
    NLL of the constant per-pixel-mean predictor with its best shared variance

    Per observation this is 0.5 * D * (log(2 pi sigma^2) + 1) with sigma^2 the
    mean squared deviation from the mean image over o_1..o_T of the set; the
    result is scaled by `steps` to compare with a segment ELBO.
    """
    frames: List[np.ndarray] = [t.observations[1:] for t in trajectories]
    if not frames:
        raise DatasetError("mean-image predictor needs at least one trajectory")
    stacked = np.concatenate(frames)
    mean_image = stacked.mean(axis=0)
    variance = max(float(((stacked - mean_image) ** 2).mean()), 1e-12)
    pixels = int(np.prod(mean_image.shape))
    return steps * 0.5 * pixels * (LOG_2PI + np.log(variance) + 1.0)
