"""
Test ELBO filtering, open-loop generation and the imagination metric
File: tests/ssm/test_inference.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import numpy as np
import pytest
import torch
import torch.nn as nn

from src.diffcore.distributions import LOG_2PI
from src.diffcore.gradcheck import check_gradients
from src.diffcore.params import ParameterSet, zero_parameters_
from src.diffcore.rng import make_generator
from src.ssm.dataset import ExpertTrajectory
from src.ssm.inference import (
    imagination_log_likelihood, initial_state, mean_image_nll, open_loop_generate, sequence_elbo,
)
from src.ssm.model import (
    MEAN, PRIOR, SAMPLE, StateSpaceModel, decode_nll, latent_params, sample_latent, transition_step,
)
from src.utils.errors import DatasetError, NonFiniteError
from tests.helpers import TINY_SSM

OBS_SHAPE = TINY_SSM.observation_shape


def tiny_model(seed=0, zero=False):
    model = StateSpaceModel(TINY_SSM)
    params = ParameterSet({"ssm": model})
    if zero:
        zero_parameters_(model)
    else:
        params.initialize(make_generator(seed, "init"))
    return model, params


def segment(batch=2, T=3, seed=0):
    gen = make_generator(seed, "segment")
    observations = torch.rand((batch, T + 1) + OBS_SHAPE, generator=gen)
    actions = torch.rand((batch, T, 2), generator=gen) * 2 - 1
    return observations, actions


def tiny_trajectory(T, seed=0):
    rng = np.random.default_rng(seed)
    return ExpertTrajectory(observations=rng.uniform(size=(T + 1,) + OBS_SHAPE),
                            actions=rng.uniform(-1, 1, size=(T, 2)), rewards=np.zeros(T))


class Unreadable(nn.Module):
    """Observation encoder that must never be called"""

    def forward(self, o):
        raise AssertionError("observation read during open-loop generation")


def test_zero_model_single_step_elbo():
    model, _ = tiny_model(zero=True)
    observations, actions = segment(batch=1, T=1)
    result = sequence_elbo(model, observations, actions, make_generator(0, "elbo"))
    pixels = TINY_SSM.pixels
    expected = 0.5 * float((observations[0, 1] ** 2).sum()) + 0.5 * pixels * LOG_2PI
    assert float(result.kl) == 0.0
    assert float(result.loss) == pytest.approx(expected, abs=1e-9)


def test_elbo_shapes_and_kl_nonnegative():
    model, _ = tiny_model()
    observations, actions = segment(batch=3, T=4)
    result = sequence_elbo(model, observations, actions, make_generator(1, "elbo"))
    assert result.states.shape == (3, 4, 4)
    assert result.initial_state.shape == (3, 4)
    assert result.policy_states().shape == (3, 4, 4)
    assert torch.equal(result.policy_states()[:, 1:], result.states[:, :-1])
    assert float(result.kl) >= 0.0
    assert torch.isfinite(result.loss)


def test_elbo_unbatched_matches_batch_of_one():
    model, _ = tiny_model(seed=2)
    observations, actions = segment(batch=1, T=2, seed=2)
    batched = sequence_elbo(model, observations, actions, latent_mode=MEAN)
    single = sequence_elbo(model, observations[0], actions[0], latent_mode=MEAN)
    assert float(single.loss) == pytest.approx(float(batched.loss), abs=1e-10)


def test_elbo_non_finite_step():
    model, _ = tiny_model(seed=3)
    observations, actions = segment(batch=1, T=3, seed=3)
    observations[0, 2, 0, 0, 0] = float("nan")
    with pytest.raises(NonFiniteError) as info:
        sequence_elbo(model, observations, actions, make_generator(3, "elbo"))
    assert info.value.step == 2


def test_elbo_rejects_mismatched_lengths():
    model, _ = tiny_model()
    observations, actions = segment(T=3)
    with pytest.raises(ValueError):
        sequence_elbo(model, observations[:, :3], actions)


def test_elbo_gradients_match_finite_differences():
    for instance in range(100):
        model, params = tiny_model(seed=instance)
        observations, actions = segment(batch=1, T=2, seed=instance)

        def loss():
            return sequence_elbo(model, observations, actions,
                                 make_generator(instance, "elbo")).loss

        result = check_gradients(loss, params, max_coords=2,
                                 generator=make_generator(instance, "coords"))
        assert result.passed(1e-4), (instance, result.per_param)


def test_open_loop_gradients_match_finite_differences():
    model, params = tiny_model(seed=5)
    observations, actions = segment(batch=2, T=3, seed=5)

    def loss():
        s0, c0 = initial_state(model, observations[:, 0])
        rollout = open_loop_generate(model, s0, actions, SAMPLE, make_generator(5, "open"), c0=c0)
        return (rollout.states ** 2).sum()

    result = check_gradients(loss, params, max_coords=3, generator=make_generator(5, "coords"))
    assert result.passed(1e-5), result.per_param


@pytest.mark.parametrize("k", [5, 10, 50])
def test_open_loop_never_reads_observations(k):
    model, _ = tiny_model(seed=6)
    s0, c0 = initial_state(model, torch.zeros((2,) + OBS_SHAPE))
    model.enc = Unreadable()
    actions = torch.zeros(2, k, 2)
    rollout = open_loop_generate(model, s0, actions, SAMPLE, make_generator(6, "open"), c0=c0,
                                 decode=True)
    assert rollout.states.shape == (2, k, 4)
    assert rollout.latents.shape == (2, k, 3)
    assert rollout.observation_means.shape == (2, k) + OBS_SHAPE


def test_low_variance_sampling_tracks_mean():
    model, _ = tiny_model(seed=7)
    last = model.prior.net[2]
    with torch.no_grad():
        last.weight[3:].zero_()
        last.bias[3:] = -10.0
    s0 = torch.zeros(4)
    actions = torch.rand(10, 2, generator=make_generator(7, "a"))
    mean_run = open_loop_generate(model, s0, actions, MEAN)
    sample_run = open_loop_generate(model, s0, actions, SAMPLE, make_generator(7, "open"))
    assert not torch.equal(mean_run.states, sample_run.states)
    assert torch.allclose(mean_run.states, sample_run.states, atol=0.1)


def test_imagination_degenerate_value():
    model, _ = tiny_model(zero=True)
    trajectories = [ExpertTrajectory(np.zeros((6,) + OBS_SHAPE), np.zeros((5, 2)), np.zeros(5))
                    for _ in range(3)]
    value = imagination_log_likelihood(model, trajectories, 5, make_generator(0, "imagine"))
    assert value == pytest.approx(-0.5 * TINY_SSM.pixels * LOG_2PI, abs=1e-9)


def test_imagination_single_step_recomputation():
    model, _ = tiny_model(seed=8)
    trajectories = [tiny_trajectory(4, seed=i) for i in range(2)]
    value = imagination_log_likelihood(model, trajectories, 1, make_generator(8, "imagine"))

    observations = torch.as_tensor(np.stack([t.observations[:2] for t in trajectories]))
    actions = torch.as_tensor(np.stack([t.actions[:1] for t in trajectories]))
    gen = make_generator(8, "imagine")
    with torch.no_grad():
        s0, c0 = initial_state(model, observations[:, 0])
        mean, log_var = latent_params(model, PRIOR, s0, actions[:, 0])
        z = sample_latent(mean, log_var, SAMPLE, gen)
        s1, _ = transition_step(model.trans, z, s0, actions[:, 0], c0)
        expected = -float(decode_nll(model.dec, s1, z, observations[:, 1]).mean())
    assert value == pytest.approx(expected, abs=1e-10)


def test_imagination_depends_on_stream():
    model, _ = tiny_model(seed=9)
    trajectories = [tiny_trajectory(6, seed=i) for i in range(2)]
    first = imagination_log_likelihood(model, trajectories, 4, make_generator(1, "imagine"))
    again = imagination_log_likelihood(model, trajectories, 4, make_generator(1, "imagine"))
    other = imagination_log_likelihood(model, trajectories, 4, make_generator(2, "imagine"))
    assert first == again
    assert first != other


def test_imagination_rejects_short_trajectories():
    model, _ = tiny_model()
    trajectories = [tiny_trajectory(6), tiny_trajectory(3), tiny_trajectory(2)]
    with pytest.raises(DatasetError) as info:
        imagination_log_likelihood(model, trajectories, 4)
    assert info.value.indices == [1, 2]
    with pytest.raises(ValueError):
        imagination_log_likelihood(model, trajectories, 0)


def test_mean_image_nll():
    shape = (1, 2, 2)
    low = ExpertTrajectory(np.zeros((3,) + shape), np.zeros((2, 2)), np.zeros(2))
    high = ExpertTrajectory(np.ones((3,) + shape), np.zeros((2, 2)), np.zeros(2))
    expected = 0.5 * 4 * (LOG_2PI + np.log(0.25) + 1.0)
    assert mean_image_nll([low, high]) == pytest.approx(expected, abs=1e-12)
    assert mean_image_nll([low, high], steps=10) == pytest.approx(10 * expected, abs=1e-10)
    with pytest.raises(DatasetError):
        mean_image_nll([])
