"""
Advantage actor-critic surrogate loss
File: src/trainers/a2c.py
"""
from typing import Callable, List, Optional

import torch

from src.dynmodel.policy import Policy
from src.envs.returns import returns_to_go
from src.envs.trajectory import Trajectory


def a2c_advantages(trajectories: List[Trajectory],
                   value_fn: Callable[[torch.Tensor], torch.Tensor],
                   gamma: float) -> List[torch.Tensor]:
    """A_t = R_t - V(s_t) per trajectory, outside the graph"""
    with torch.no_grad():
        return [torch.as_tensor(returns_to_go(traj.rewards, gamma))
                - value_fn(torch.as_tensor(traj.features[:-1])) for traj in trajectories]


def a2c_loss(trajectories: List[Trajectory], policy: Policy,
             value_fn: Callable[[torch.Tensor], torch.Tensor],
             gamma: float, value_coef: float, entropy_coef: float,
             advantages: Optional[List[torch.Tensor]] = None) -> torch.Tensor:
    """
    l_rl = -sum_t log pi(a_t|s_t) A_t + c_v sum_t (V(s_t) - R_t)^2 - c_e sum_t H(pi(.|s_t))

    Sums run over each episode's steps; the result is the mean over episodes.
    R_t is the discounted return-to-go and A_t = R_t - V(s_t) is held constant
    in the policy term. Log-probabilities are recomputed from the recorded
    states and (unclipped) actions, so the policy gradient is the score function.
    `advantages` (from a2c_advantages) fixes A_t instead of recomputing it.
    """
    if not trajectories:
        raise ValueError("a2c_loss needs at least one trajectory")
    if advantages is not None and len(advantages) != len(trajectories):
        raise ValueError(f"{len(advantages)} advantage sequences for {len(trajectories)} trajectories")
    total = torch.zeros((), dtype=torch.float64)
    for i, traj in enumerate(trajectories):
        states = torch.as_tensor(traj.features[:-1])
        actions = torch.as_tensor(traj.actions)
        returns = torch.as_tensor(returns_to_go(traj.rewards, gamma))
        values = value_fn(states)
        advantage = (returns - values).detach() if advantages is None else advantages[i]
        policy_term = -(policy.log_prob(states, actions) * advantage).sum()
        value_term = ((values - returns) ** 2).sum()
        entropy_term = policy.entropy(states).sum()
        total = total + policy_term + value_coef * value_term - entropy_coef * entropy_term
    return total / len(trajectories)
