"""
Observation-space training: A2C + dynamics NLL + consistency loss
File: src/trainers/obs_space.py
"""
from typing import Dict, List

import numpy as np
import torch
from loguru import logger

from src.consistency.encoder import ENCODING_DIM, SeqEncoder
from src.consistency.losses import collapse_monitor, pairs_consistency_loss, total_loss
from src.consistency.rollouts import build_rollout_pairs, closed_loop_rollout
from src.diffcore.optim import AdamOptimizer
from src.diffcore.params import ParameterSet, backward_gradients
from src.diffcore.rng import make_generator, make_numpy_rng
from src.dynmodel.dynamics import DynamicsModel, dynamics_nll, encode_action
from src.dynmodel.normalizer import Normalizer
from src.dynmodel.policy import REPARAM, SAMPLE, Policy, ValueFunction
from src.envs.registry import make_env
from src.envs.trajectory import Trajectory
from src.trainers.a2c import a2c_loss
from src.trainers.base import BaseTrainer, TrainResult
from src.trainers.config import RunConfig
from src.trainers.metrics import TrainMetrics
from src.utils.errors import ConfigurationError


class ObsSpaceTrainer(BaseTrainer):
    """Closed-loop A2C on environment features with a learned delta model"""

    pathway = "obs"

    def setup(self):
        config = self.config
        self.env = make_env(config.env)
        spec = self.env.spec
        self.discrete = spec.is_discrete
        obs_dim = spec.observation_dim

        self.policy = Policy(obs_dim, spec.action_dim, discrete=self.discrete)
        self.value_fn = ValueFunction(obs_dim)
        self.model = DynamicsModel(obs_dim, spec.action_dim)
        self.encoder = SeqEncoder(obs_dim, ENCODING_DIM, mode=config.encoder_mode)
        self.norm = Normalizer(obs_dim, spec.action_dim)

        groups = {"policy": self.policy, "value": self.value_fn}
        if config.use_model:
            groups.update({"dyn": self.model, "enc": self.encoder})
        self.params = ParameterSet(groups)
        self.params.initialize(make_generator(config.seed, "init"))
        self.optimizer = AdamOptimizer(self.params, lr=config.lr_model, group_lrs={
            "policy": config.lr_policy,
            "value": config.lr_policy,
            "dyn": config.lr_model,
            "enc": config.lr_encoder,
        })
        self.action_mode = SAMPLE if self.discrete else REPARAM
        logger.info(f"ObsSpaceTrainer initialized: {self.env}, {self.params.numel()} parameters, "
                    f"use_model={config.use_model}")

    def encode_actions(self, actions) -> torch.Tensor:
        return encode_action(torch.as_tensor(actions), self.discrete, self.env.spec.action_dim)

    def collect(self, update: int) -> List[Trajectory]:
        """B closed-loop episodes with per-episode streams (seed, update, episode)"""
        config = self.config
        return [
            closed_loop_rollout(
                self.env, self.policy, config.horizon, self.action_mode,
                generator=make_generator(config.seed, "rollout", update, episode),
                reset_rng=make_numpy_rng(config.seed, "reset", update, episode),
                gamma=config.gamma,
            )
            for episode in range(config.batch_size)
        ]

    def transitions(self, trajectories: List[Trajectory]):
        states = torch.as_tensor(np.concatenate([t.features[:-1] for t in trajectories]))
        next_states = torch.as_tensor(np.concatenate([t.features[1:] for t in trajectories]))
        actions = self.encode_actions(np.concatenate([t.actions for t in trajectories]))
        return states, actions, next_states

    def consistency_terms(self, trajectories: List[Trajectory]):
        """(l_cc, collapse monitor) over each episode's first k steps"""
        policy = self.policy if self.config.open_loop_policy_actions else None
        pairs = build_rollout_pairs(trajectories, self.model, self.norm, self.config.k,
                                    self.encode_actions, policy)
        l_cc = pairs_consistency_loss(self.encoder, pairs)
        shortest = min(p.length for p in pairs)
        real = torch.stack([p.real_states[:shortest] for p in pairs])
        return l_cc, collapse_monitor(self.encoder, real)

    def run_update(self, update: int) -> TrainMetrics:
        config = self.config
        trajectories = self.collect(update)
        l_rl = a2c_loss(trajectories, self.policy, self.value_fn, config.gamma,
                        config.value_coef, config.entropy_coef)
        row = TrainMetrics(
            update=update,
            avg_return=float(np.mean([t.episodic_return for t in trajectories])),
            avg_discounted_return=float(np.mean([t.discounted_return for t in trajectories])),
            rl_loss=float(l_rl),
        )

        objective = l_rl
        if config.use_model:
            states, actions, next_states = self.transitions(trajectories)
            self.norm.update(states, actions, next_states)
            l_model = dynamics_nll(self.model, self.norm, states, actions, next_states)
            if config.alpha > 0:
                l_cc, collapse = self.consistency_terms(trajectories)
            else:
                with torch.no_grad():
                    l_cc, collapse = self.consistency_terms(trajectories)
            objective = total_loss(l_rl, l_cc, config.alpha) + l_model
            row.model_nll = float(l_model)
            row.consistency_loss = float(l_cc)
            row.collapse_monitor = collapse

        grads = backward_gradients(objective, self.params, op_name="l_total")
        self.optimizer.step(grads)
        return row

    def snapshot_tensors(self) -> Dict[str, torch.Tensor]:
        tensors = self.params.tensors()
        if self.config.use_model:
            tensors.update(self.norm.state_dict("norm"))
        return tensors


def train_obs_space(config: RunConfig) -> TrainResult:
    if config.pathway != "obs":
        raise ConfigurationError(f"expected pathway 'obs', got {config.pathway!r}", key="pathway")
    return ObsSpaceTrainer(config).train()
