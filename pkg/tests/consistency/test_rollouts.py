"""
Test closed-loop and open-loop rollouts
File: tests/consistency/test_rollouts.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import numpy as np
import pytest
import torch
import torch.nn as nn

from src.consistency.rollouts import (
    RolloutPair, build_rollout_pairs, closed_loop_rollout, open_loop_rollout,
)
from src.diffcore.params import ParameterSet, zero_parameters_
from src.diffcore.rng import make_generator
from src.dynmodel.dynamics import DynamicsModel, encode_action
from src.dynmodel.normalizer import Normalizer
from src.dynmodel.policy import MEAN, REPARAM, SAMPLE, Policy
from src.envs.point_mass import PointMass2D
from src.envs.registry import make_env
from src.utils.errors import DivergenceError, EnvironmentStepError
from tests.helpers import PointMassOracle


def make_policy(obs_dim=6, action_dim=2, discrete=False, seed=0):
    policy = Policy(obs_dim, action_dim, discrete=discrete)
    ParameterSet({"policy": policy}).initialize(make_generator(seed, "init"))
    return policy


class FailingPointMass(PointMass2D):
    """Raises on the step with index `fail_at`"""

    def __init__(self, fail_at: int):
        super().__init__()
        self.fail_at = fail_at
        self.calls = 0

    def step(self, state, action):
        if self.calls == self.fail_at:
            raise RuntimeError("simulator fault")
        self.calls += 1
        return super().step(state, action)


class NaNAfter(nn.Module):
    """Dynamics double that turns non-finite on call `n`"""

    def __init__(self, n: int, state_dim: int = 6):
        super().__init__()
        self.n = n
        self.state_dim = state_dim
        self.calls = 0

    def forward(self, norm_states, norm_actions):
        self.calls += 1
        mean = torch.zeros_like(norm_states)
        if self.calls > self.n:
            mean = mean + float("nan")
        return mean, torch.zeros_like(mean)


def rollout(env_name="PointMass2D", T=50, seed=0, mode=SAMPLE):
    env = make_env(env_name)
    spec = env.spec
    policy = make_policy(spec.observation_dim, spec.action_dim, spec.is_discrete)
    return closed_loop_rollout(env, policy, T, mode, generator=make_generator(seed, "act"),
                               reset_rng=np.random.default_rng(seed))


def test_single_step_rollout():
    traj = rollout(T=1)
    assert traj.length == 1
    assert traj.features.shape == (2, 6)
    assert traj.actions.shape == (1, 2)


def test_rollout_is_deterministic_given_streams():
    first, again = rollout(seed=3), rollout(seed=3)
    assert np.array_equal(first.states, again.states)
    assert np.array_equal(first.rewards, again.rewards)
    assert not np.array_equal(first.states, rollout(seed=4).states)


def test_rewards_replay_through_environment():
    traj = rollout(seed=5)
    env = make_env("PointMass2D")
    state = traj.start_state
    for t in range(traj.length):
        state, reward, _ = env.step(state, traj.actions[t])
        assert np.array_equal(state, traj.states[t])
        assert reward == traj.rewards[t]


def test_discrete_rollout_stops_at_goal():
    env = make_env("DiscreteGridNav")
    policy = make_policy(25, 4, discrete=True)
    traj = closed_loop_rollout(env, policy, 30, SAMPLE, generator=make_generator(0, "act"),
                               start_state=np.array([2.0, 2.0, 2.0, 3.0]))
    assert traj.actions.dtype == np.int64
    assert traj.length <= 30
    if traj.terminated:
        assert traj.rewards[-1] == 1.0
        assert np.array_equal(traj.states[-1][0:2], [2.0, 3.0])


def test_environment_failure_reports_step():
    env = FailingPointMass(fail_at=2)
    with pytest.raises(EnvironmentStepError) as info:
        closed_loop_rollout(env, make_policy(), 10, MEAN, start_state=np.zeros(6))
    assert info.value.step == 2


def test_rollout_length_must_be_positive():
    with pytest.raises(ValueError):
        rollout(T=0)


def test_zero_model_open_loop_stays_at_start():
    model = DynamicsModel(6, 2)
    zero_parameters_(model)
    s0 = torch.tensor([0.1, 0.2, 0.0, 0.0, -0.5, 0.5])
    imagined = open_loop_rollout(model, Normalizer(6, 2), s0, torch.ones(7, 2))
    assert imagined.shape == (7, 6)
    assert torch.equal(imagined, s0.expand(7, 6))


def test_open_loop_reads_only_imagined_states():
    traj = rollout(seed=6)
    norm = Normalizer(6, 2)
    norm.update(traj.all_states()[:-1], traj.actions, traj.states)
    oracle = PointMassOracle(norm)
    actions = torch.as_tensor(traj.actions[:10])
    imagined = open_loop_rollout(oracle, norm, torch.as_tensor(traj.start_state), actions,
                                 action_encoder=lambda a: encode_action(a, False, 2))
    assert len(oracle.calls) == 10
    for t in range(1, 10):
        assert torch.allclose(norm.states.invert(oracle.calls[t]), imagined[t - 1], atol=1e-12)
    assert np.allclose(imagined.numpy(), traj.states[:10], atol=1e-9)


def test_divergence_reports_step():
    with pytest.raises(DivergenceError) as info:
        open_loop_rollout(NaNAfter(2), Normalizer(6, 2), torch.zeros(6), torch.zeros(5, 2))
    assert info.value.step == 2


def test_policy_driven_open_loop():
    model = DynamicsModel(6, 2)
    zero_parameters_(model)
    imagined = open_loop_rollout(model, Normalizer(6, 2), torch.zeros(6), torch.zeros(4, 2),
                                 policy=make_policy())
    assert imagined.shape == (4, 6)


def test_pairs_truncate_to_trajectory_length():
    env = make_env("DiscreteGridNav")
    policy = make_policy(25, 4, discrete=True)
    traj = closed_loop_rollout(env, policy, 3, SAMPLE, generator=make_generator(1, "act"),
                               start_state=np.array([0.0, 0.0, 4.0, 4.0]))
    model = DynamicsModel(25, 4)
    pairs = build_rollout_pairs([traj], model, Normalizer(25, 4), k=20,
                                action_encoder=lambda a: encode_action(a, True, 4))
    assert pairs[0].length == 3
    assert pairs[0].real_states.shape == (3, 25)


def test_reparam_pairs_carry_action_gradients():
    traj = rollout(T=5, mode=REPARAM)
    model = DynamicsModel(6, 2)
    ParameterSet({"dyn": model}).initialize(make_generator(0, "init"))
    pairs = build_rollout_pairs([traj], model, Normalizer(6, 2), k=5)
    assert pairs[0].imagined_states.requires_grad
    assert pairs[0].actions.requires_grad


def test_pair_shapes_validated():
    with pytest.raises(ValueError):
        RolloutPair(torch.zeros(2), torch.zeros(3, 1), torch.zeros(3, 2), torch.zeros(4, 2))
