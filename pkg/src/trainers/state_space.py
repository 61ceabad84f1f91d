"""
State-space training: imitation + ELBO + consistency between filtered and
prior-generated latent states
File: src/trainers/state_space.py
"""
from pathlib import Path
from typing import Dict

import torch
from loguru import logger

from src.consistency.encoder import ENCODING_DIM, SeqEncoder
from src.consistency.losses import collapse_monitor, consistency_loss, total_loss
from src.diffcore.optim import AdamOptimizer
from src.diffcore.params import ParameterSet, backward_gradients
from src.diffcore.rng import make_generator
from src.dynmodel.policy import Policy
from src.ssm.dataset import ExpertDataset, generate_expert_dataset
from src.ssm.inference import imagination_log_likelihood, open_loop_generate, sequence_elbo
from src.ssm.model import SAMPLE, SSMConfig, StateSpaceModel
from src.trainers.base import BaseTrainer, TrainResult
from src.trainers.config import RunConfig
from src.trainers.imitation import imitation_loss
from src.trainers.metrics import TrainMetrics
from src.utils.errors import ConfigurationError

IMAGINATION_STREAM = "imagination-eval"
SSM_CONFIG_KEY = "meta.ssm_config"


def ensure_expert_dataset(config: RunConfig) -> ExpertDataset:
    """Load the configured dataset, generating and saving it first if absent"""
    path = Path(config.dataset_path)
    if path.exists():
        return ExpertDataset.load(str(path))
    logger.info(f"No expert dataset at {path}; generating {config.dataset_episodes} episodes")
    dataset = generate_expert_dataset(config.env, config.dataset_episodes, seed=config.seed)
    dataset.save(str(path))
    return dataset


def ssm_config_tensor(config: SSMConfig) -> torch.Tensor:
    return torch.tensor([float(v) for v in config.to_dict().values()], dtype=torch.float64)


def ssm_config_from_tensor(values: torch.Tensor) -> SSMConfig:
    keys = list(SSMConfig().to_dict())
    return SSMConfig(**{key: int(v) for key, v in zip(keys, values.tolist())})


def imagination_metric(model: StateSpaceModel, trajectories, k: int, seed: int) -> float:
    """Imagination log-likelihood with the run's dedicated sampling stream"""
    return imagination_log_likelihood(model, trajectories, k, make_generator(seed, IMAGINATION_STREAM))


class StateSpaceTrainer(BaseTrainer):
    """Expert-data training of the latent model and an imitation policy"""

    pathway = "ssm"

    def __init__(self, config: RunConfig, dataset: ExpertDataset = None):
        super().__init__(config)
        self.dataset = dataset

    def setup(self):
        config = self.config
        if self.dataset is None:
            self.dataset = ensure_expert_dataset(config)
        self.train_set, self.heldout_set = self.dataset.split(config.heldout_episodes)

        self.ssm_config = SSMConfig(action_dim=self.dataset.action_dim,
                                    frame_stack=self.dataset.frame_stack,
                                    frame_size=self.dataset.height)
        self.model = StateSpaceModel(self.ssm_config)
        self.policy = Policy(self.ssm_config.state_dim, self.dataset.action_dim)
        self.encoder = SeqEncoder(self.ssm_config.state_dim, ENCODING_DIM, mode=config.encoder_mode)

        self.params = ParameterSet({"ssm": self.model, "policy": self.policy, "enc": self.encoder})
        self.params.initialize(make_generator(config.seed, "init"))
        self.optimizer = AdamOptimizer(self.params, lr=config.lr_model, group_lrs={
            "ssm": config.lr_model,
            "policy": config.lr_policy,
            "enc": config.lr_encoder,
        })
        logger.info(f"StateSpaceTrainer initialized: {len(self.train_set)} training / "
                    f"{len(self.heldout_set)} held-out trajectories, T={config.horizon}")

    def consistency_terms(self, elbo, actions, generator):
        imagined = open_loop_generate(self.model, elbo.initial_state, actions, SAMPLE, generator,
                                      c0=elbo.initial_cell).states
        return consistency_loss(self.encoder, elbo.states, imagined)

    def run_update(self, update: int) -> TrainMetrics:
        config = self.config
        generator = make_generator(config.seed, "ssm-update", update)
        observations, actions = self.train_set.sample_segments(config.horizon, config.batch_size,
                                                               generator)
        elbo = sequence_elbo(self.model, observations, actions, generator, SAMPLE)
        if config.alpha > 0:
            l_cc = self.consistency_terms(elbo, actions, generator)
        else:
            with torch.no_grad():
                l_cc = self.consistency_terms(elbo, actions, generator)
        l_imitation = imitation_loss(self.policy, elbo.policy_states(), actions)
        objective = total_loss(l_imitation + elbo.loss, l_cc, config.alpha)

        grads = backward_gradients(objective, self.params, op_name="l_total")
        self.optimizer.step(grads)

        row = TrainMetrics(
            update=update,
            elbo=float(elbo.loss),
            imitation_loss=float(l_imitation),
            consistency_loss=float(l_cc),
            collapse_monitor=collapse_monitor(self.encoder, elbo.states.detach()),
        )
        if len(self.heldout_set) and (update + 1) % config.eval_every == 0:
            row.imagination_ll = imagination_metric(self.model, self.heldout_set.trajectories,
                                                    config.horizon, config.seed)
        return row

    def snapshot_tensors(self) -> Dict[str, torch.Tensor]:
        tensors = self.params.tensors()
        tensors[SSM_CONFIG_KEY] = ssm_config_tensor(self.ssm_config)
        return tensors


def train_state_space(config: RunConfig, dataset: ExpertDataset = None) -> TrainResult:
    if config.pathway != "ssm":
        raise ConfigurationError(f"expected pathway 'ssm', got {config.pathway!r}", key="pathway")
    return StateSpaceTrainer(config, dataset).train()
