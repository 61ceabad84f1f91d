"""
Closed-loop (real) and open-loop (imagined) rollouts
File: src/consistency/rollouts.py
"""
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import torch
from loguru import logger

from src.dynmodel.dynamics import MEAN, DynamicsModel, predict_delta
from src.dynmodel.normalizer import Normalizer
from src.dynmodel.policy import Policy, ValueFunction, policy_act
from src.envs.base import BaseEnvironment
from src.envs.trajectory import Trajectory
from src.utils.errors import DivergenceError, EnvironmentStepError, NonFiniteError


def closed_loop_rollout(env: BaseEnvironment, policy: Policy, T: int, action_mode: str,
                        generator: Optional[torch.Generator] = None,
                        value_fn: Optional[ValueFunction] = None,
                        start_state: Optional[np.ndarray] = None,
                        reset_rng: Optional[np.random.Generator] = None,
                        gamma: float = 0.99) -> Trajectory:
    """
    Act in the real environment for up to T steps

    Each action is chosen from the policy given the real current state. In
    "reparam" mode the differentiable action tensors and their noise are kept
    on the trajectory for the consistency loss.
    """
    if T < 1:
        raise ValueError(f"rollout length must be >= 1, got {T}")
    state = np.asarray(start_state if start_state is not None else env.reset(reset_rng),
                       dtype=np.float64)
    start = state.copy()
    discrete = env.spec.is_discrete

    features, states, actions, rewards, eps = [env.features(state)], [], [], [], []
    action_tensors, log_probs, values = [], [], []
    terminated = False

    for t in range(T):
        step = policy_act(policy, torch.as_tensor(features[-1]), action_mode,
                          value_fn=value_fn, generator=generator)
        action = int(step.action) if discrete else step.action.detach().numpy().copy()
        try:
            state, reward, done = env.step(state, action)
        except Exception as e:
            logger.error(f"{env} failed at step {t}: {e}")
            raise EnvironmentStepError(str(e), step=t) from e

        features.append(env.features(state))
        states.append(state)
        actions.append(action)
        rewards.append(reward)
        action_tensors.append(step.action)
        log_probs.append(step.log_prob)
        if step.eps is not None:
            eps.append(step.eps.detach().numpy())
        if step.value is not None:
            values.append(step.value)
        if done:
            terminated = True
            break

    return Trajectory(
        start_state=start,
        states=np.array(states),
        actions=np.array(actions, dtype=np.int64 if discrete else np.float64),
        rewards=np.array(rewards),
        gamma=gamma,
        features=np.array(features),
        eps=np.array(eps) if eps else None,
        action_tensors=action_tensors,
        log_probs=log_probs,
        values=values,
        terminated=terminated,
    )


def open_loop_rollout(model: DynamicsModel, norm: Normalizer, s0: torch.Tensor,
                      actions: torch.Tensor,
                      action_encoder: Optional[Callable[[torch.Tensor], torch.Tensor]] = None,
                      policy: Optional[Policy] = None) -> torch.Tensor:
    """
    Unroll the learned model from s0: s^I_{t+1} = f(s^I_t, a_t)

    The real states are never read. With `policy`, actions are chosen by the
    policy's mean from the imagined states instead of replaying `actions`.

    Returns:
        (k, d) imagined states s^I_1..s^I_k
    """
    encode = action_encoder or (lambda a: a)
    s = s0
    imagined = []
    for t in range(len(actions)):
        a = actions[t] if policy is None else policy_act(policy, s, MEAN).action
        try:
            s = predict_delta(model, norm, s, encode(a), MEAN, step=t).next_state
        except NonFiniteError:
            logger.error(f"Open-loop unroll diverged at step {t}")
            raise DivergenceError("non-finite imagined state", step=t)
        imagined.append(s)
    return torch.stack(imagined)


@dataclass
class RolloutPair:
    """Real and imagined sequences sharing a start state and action sequence"""
    start_state: torch.Tensor
    actions: torch.Tensor
    real_states: torch.Tensor
    imagined_states: torch.Tensor
    source: tuple = (0, 0)

    def __post_init__(self):
        if self.real_states.shape != self.imagined_states.shape:
            raise ValueError(f"pair shapes differ: {tuple(self.real_states.shape)} vs "
                             f"{tuple(self.imagined_states.shape)}")

    @property
    def length(self) -> int:
        return self.real_states.shape[0]


def trajectory_actions(traj: Trajectory) -> torch.Tensor:
    """Recorded actions; differentiable tensors when the rollout kept them"""
    if traj.action_tensors:
        return torch.stack([torch.as_tensor(a) for a in traj.action_tensors])
    return torch.as_tensor(traj.actions)


def build_rollout_pairs(trajectories: List[Trajectory], model: DynamicsModel,
                        norm: Normalizer, k: int,
                        action_encoder: Optional[Callable] = None,
                        policy: Optional[Policy] = None) -> List[RolloutPair]:
    """One pair per trajectory from its first min(k, T) steps"""
    pairs = []
    for index, traj in enumerate(trajectories):
        steps = min(k, traj.length)
        if steps < 1:
            continue
        start = torch.as_tensor(traj.features[0])
        actions = trajectory_actions(traj)[:steps]
        imagined = open_loop_rollout(model, norm, start, actions, action_encoder, policy)
        real = torch.as_tensor(traj.features[1:steps + 1])
        pairs.append(RolloutPair(start_state=start, actions=actions, real_states=real,
                                 imagined_states=imagined, source=(index, 0)))
    return pairs
