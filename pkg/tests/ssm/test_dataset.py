"""
Test expert data generation and the trajectory file format
File: tests/ssm/test_dataset.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import numpy as np
import pytest

from src.diffcore.rng import make_generator, make_numpy_rng
from src.ssm.dataset import (
    MAGIC, ExpertDataset, ExpertTrajectory, expert_episode, generate_expert_dataset,
)
from src.utils.errors import DatasetError, UnsupportedEnvironmentError


@pytest.fixture(scope="module")
def small_dataset():
    return generate_expert_dataset("PointMass2D", episodes=4, seed=0, horizon=8)


def test_default_episode_layout():
    episode = expert_episode("PointMass2D", make_numpy_rng(0, "expert-data", 0))
    assert episode.observations.shape == (51, 4, 16, 16)
    assert episode.actions.shape == (50, 2)
    assert episode.rewards.shape == (50,)
    assert np.all(np.abs(episode.actions) <= 1.0)


def test_pendulum_episode():
    episode = expert_episode("PendulumSwingUp", make_numpy_rng(0, "expert-data", 0), horizon=10)
    assert episode.actions.shape == (10, 1)


def test_generation_is_deterministic(small_dataset):
    again = generate_expert_dataset("PointMass2D", episodes=4, seed=0, horizon=8)
    for a, b in zip(small_dataset, again):
        assert np.array_equal(a.observations, b.observations)
        assert np.array_equal(a.actions, b.actions)
    other = generate_expert_dataset("PointMass2D", episodes=1, seed=1, horizon=8)
    assert not np.array_equal(other[0].actions, small_dataset[0].actions)


def test_discrete_environment_has_no_expert():
    with pytest.raises(UnsupportedEnvironmentError):
        generate_expert_dataset("DiscreteGridNav", episodes=1)


def test_save_load(tmp_path, small_dataset):
    path = tmp_path / "data" / "expert.bin"
    small_dataset.save(str(path))
    loaded = ExpertDataset.load(str(path))
    assert len(loaded) == 4
    assert (loaded.frame_stack, loaded.height, loaded.width, loaded.action_dim) == (4, 16, 16, 2)
    for a, b in zip(small_dataset, loaded):
        assert np.array_equal(a.observations, b.observations)
        assert np.array_equal(a.actions, b.actions)
        assert np.array_equal(a.rewards, b.rewards)
    assert path.read_bytes().startswith(MAGIC)


def test_load_rejects_bad_magic(tmp_path, small_dataset):
    path = tmp_path / "expert.bin"
    small_dataset.save(str(path))
    blob = path.read_bytes()
    path.write_bytes(b"X" + blob[1:])
    with pytest.raises(DatasetError):
        ExpertDataset.load(str(path))


def test_load_rejects_truncation(tmp_path, small_dataset):
    path = tmp_path / "expert.bin"
    small_dataset.save(str(path))
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(DatasetError) as info:
        ExpertDataset.load(str(path))
    assert info.value.indices == [3]
    path.write_bytes(blob + b"\x00")
    with pytest.raises(DatasetError):
        ExpertDataset.load(str(path))


def test_layout_violations_name_trajectories():
    good = ExpertTrajectory(np.zeros((3, 1, 4, 4)), np.zeros((2, 1)), np.zeros(2))
    bad = ExpertTrajectory(np.zeros((2, 1, 4, 4)), np.zeros((2, 1)), np.zeros(2))
    with pytest.raises(DatasetError) as info:
        ExpertDataset([good, bad, good], frame_stack=1, height=4, width=4, action_dim=1)
    assert info.value.indices == [1]


def test_split_holds_out_last(small_dataset):
    train, heldout = small_dataset.split(1)
    assert len(train) == 3 and len(heldout) == 1
    assert heldout[0] is small_dataset[3]
    with pytest.raises(DatasetError):
        small_dataset.split(4)


def test_sample_segments(small_dataset):
    observations, actions = small_dataset.sample_segments(5, 6, make_generator(0, "segments"))
    assert observations.shape == (6, 6, 4, 16, 16)
    assert actions.shape == (6, 5, 2)
    again = small_dataset.sample_segments(5, 6, make_generator(0, "segments"))
    assert np.array_equal(observations.numpy(), again[0].numpy())
    with pytest.raises(DatasetError):
        small_dataset.sample_segments(9, 2, make_generator(0, "segments"))
