"""
Test the Adam optimizer wrapper
File: tests/diffcore/test_optim.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import pytest
import torch

from src.diffcore.optim import AdamOptimizer, adam_step
from src.diffcore.params import GradientRecord, ParameterSet, backward_gradients
from src.diffcore.rng import make_generator
from src.dynmodel.networks import build_mlp
from src.utils.errors import NonFiniteError
from tests.helpers import ParamHolder


def _scalar_set(value: float = 1.0):
    holder = ParamHolder(w=torch.tensor([value]))
    return holder, ParameterSet({"x": holder})


def test_zero_gradient_leaves_parameters():
    holder, params = _scalar_set()
    optimizer = AdamOptimizer(params, lr=1e-3)
    count = adam_step(optimizer, GradientRecord({"x.w": torch.zeros(1)}))
    assert count == 1
    assert torch.equal(holder.w.detach(), torch.tensor([1.0]))
    state = optimizer.optimizer.state[holder.w]
    assert torch.equal(state["exp_avg"], torch.zeros(1))
    assert torch.equal(state["exp_avg_sq"], torch.zeros(1))


def test_first_step_is_lr_times_sign():
    holder, params = _scalar_set()
    optimizer = AdamOptimizer(params, lr=1e-3)
    optimizer.step(GradientRecord({"x.w": torch.tensor([0.5])}))
    delta = float(holder.w) - 1.0
    assert delta == pytest.approx(-1e-3 * 0.5 / (0.5 + 1e-8), abs=1e-12)
    assert delta == pytest.approx(-1e-3, abs=1e-10)


def test_non_finite_gradient_names_parameter():
    holder, params = _scalar_set()
    optimizer = AdamOptimizer(params)
    with pytest.raises(NonFiniteError) as info:
        optimizer.step(GradientRecord({"x.w": torch.tensor([float("nan")])}))
    assert info.value.param == "x.w"
    assert float(holder.w) == 1.0
    assert optimizer.step_count == 0


def test_group_learning_rates():
    fast = ParamHolder(w=torch.tensor([0.0]))
    slow = ParamHolder(w=torch.tensor([0.0]))
    params = ParameterSet({"policy": slow, "dyn": fast})
    optimizer = AdamOptimizer(params, lr=1e-3, group_lrs={"policy": 1e-4})
    optimizer.step(GradientRecord({"policy.w": torch.ones(1), "dyn.w": torch.ones(1)}))
    assert float(fast.w) == pytest.approx(-1e-3, abs=1e-10)
    assert float(slow.w) == pytest.approx(-1e-4, abs=1e-10)


def test_frozen_parameters_never_move():
    frozen = ParamHolder(w=torch.tensor([2.0]))
    frozen.requires_grad_(False)
    live = ParamHolder(w=torch.tensor([2.0]))
    params = ParameterSet({"enc": frozen, "dyn": live})
    optimizer = AdamOptimizer(params)
    grads = backward_gradients((frozen.w * live.w).sum(), params)
    assert torch.equal(grads["enc.w"], torch.zeros(1))
    optimizer.step(grads)
    assert float(frozen.w) == 2.0
    assert float(live.w) != 2.0


def _train(seed: int) -> torch.Tensor:
    mlp = build_mlp(3, 1, n_layers=1, size=4)
    params = ParameterSet({"mlp": mlp})
    params.initialize(make_generator(seed, "init"))
    x = torch.randn(8, 3, generator=make_generator(seed, "data"))
    optimizer = AdamOptimizer(params, lr=1e-2)
    for _ in range(25):
        optimizer.step(backward_gradients((mlp(x) ** 2).mean(), params))
    return torch.cat([p.detach().reshape(-1) for p in mlp.parameters()])


def test_identical_runs_are_bit_identical():
    assert torch.equal(_train(5), _train(5))


if __name__ == "__main__":
    print("\n" + "=" * 70)
    print("Optimizer tests")
    print("=" * 70)
    test_zero_gradient_leaves_parameters()
    test_first_step_is_lr_times_sign()
    test_non_finite_gradient_names_parameter()
    test_group_learning_rates()
    test_frozen_parameters_never_move()
    test_identical_runs_are_bit_identical()
    print("✓ All optimizer tests passed")
