"""
Test running normalization statistics
File: tests/dynmodel/test_normalizer.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import numpy as np
import pytest
import torch

from src.dynmodel.normalizer import Normalizer, RunningStats, normalizer_update_apply


def test_fresh_stats_are_identity():
    stats = RunningStats(3)
    x = torch.tensor([0.5, -2.0, 7.0])
    assert torch.equal(stats.invert(torch.zeros(3)), torch.zeros(3))
    assert torch.allclose(stats.apply(x), x, atol=1e-6)


def test_two_point_example():
    stats = RunningStats(2)
    stats.update(np.array([[0.0, 0.0], [2.0, 2.0]]))
    assert stats.mean.tolist() == [1.0, 1.0]
    assert stats.std.tolist() == [1.0, 1.0]
    assert torch.allclose(stats.apply(torch.tensor([2.0, 2.0])), torch.ones(2), atol=1e-7)


def test_apply_invert_round_trip():
    rng = np.random.default_rng(3)
    stats = RunningStats(4)
    stats.update(rng.normal(2.0, 5.0, size=(100, 4)))
    x = torch.as_tensor(rng.normal(size=(10, 4)))
    assert torch.allclose(stats.invert(stats.apply(x)), x, atol=1e-9)


def test_chunked_updates_match_single_batch():
    rng = np.random.default_rng(4)
    data = rng.normal(size=(90, 3))
    full, chunked = RunningStats(3), RunningStats(3)
    full.update(data)
    for start in range(0, 90, 25):
        chunked.update(data[start:start + 25])
    assert chunked.count == 90
    assert torch.allclose(full.mean, chunked.mean, atol=1e-12)
    assert torch.allclose(full.std, chunked.std, atol=1e-12)


def test_empty_first_batch_is_rejected():
    norm = Normalizer(2, 1)
    with pytest.raises(ValueError):
        normalizer_update_apply(norm, np.zeros((0, 2)), np.zeros((0, 1)), np.zeros((0, 2)))


def test_empty_batch_after_first_is_noop():
    stats = RunningStats(2)
    stats.update(np.ones((3, 2)))
    stats.update(np.zeros((0, 2)))
    assert stats.count == 3


def test_update_apply_normalizes_deltas():
    norm = Normalizer(2, 1)
    states = np.array([[0.0, 0.0], [1.0, 1.0]])
    next_states = states + np.array([[1.0, 3.0], [3.0, 5.0]])
    batch = normalizer_update_apply(norm, states, np.array([[0.5], [-0.5]]), next_states)
    assert norm.count == 2
    assert torch.allclose(batch.deltas, torch.tensor([[-1.0, -1.0], [1.0, 1.0]]), atol=1e-7)
    assert torch.allclose(batch.actions, torch.tensor([[1.0], [-1.0]]), atol=1e-7)


def test_state_dict_round_trip():
    norm = Normalizer(2, 1)
    norm.update(np.ones((4, 2)) * 3.0, np.zeros((4, 1)), np.ones((4, 2)) * 4.0)
    restored = Normalizer(2, 1)
    restored.load_state_dict(norm.state_dict())
    assert restored.count == 4
    assert torch.equal(restored.states.mean, norm.states.mean)
    assert torch.equal(restored.deltas.std, norm.deltas.std)
