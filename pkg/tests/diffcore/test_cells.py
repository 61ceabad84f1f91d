"""
Test GRU and LSTM cells
File: tests/diffcore/test_cells.py
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import math

import pytest
import torch

from src.diffcore.cells import GRUCell, LSTMCell, gru_cell, lstm_cell
from src.diffcore.gradcheck import check_gradients
from src.diffcore.params import ParameterSet
from src.diffcore.rng import make_generator
from src.utils.errors import ShapeError
from tests.helpers import ParamHolder


def test_gru_zero_weights_halves_hidden():
    cell = GRUCell(1, 1)
    out = gru_cell(torch.zeros(1), torch.tensor([0.4]), cell)
    assert torch.allclose(out, torch.tensor([0.2]), atol=1e-15)


def test_gru_zero_fixed_point():
    cell = GRUCell(2, 3)
    assert torch.equal(gru_cell(torch.zeros(2), torch.zeros(3), cell), torch.zeros(3))


def test_lstm_zero_weights():
    cell = LSTMCell(1, 1)
    h, c = lstm_cell(torch.zeros(1), torch.zeros(1), torch.zeros(1), cell)
    assert torch.equal(h, torch.zeros(1)) and torch.equal(c, torch.zeros(1))

    h, c = lstm_cell(torch.zeros(1), torch.zeros(1), torch.ones(1), cell)
    assert float(c) == pytest.approx(0.5, abs=1e-15)
    assert float(h) == pytest.approx(0.5 * math.tanh(0.5), abs=1e-12)
    assert float(h) == pytest.approx(0.23106, abs=1e-5)


def test_shape_mismatch_names_operands():
    cell = GRUCell(2, 3)
    with pytest.raises(ShapeError) as info:
        gru_cell(torch.zeros(4), torch.zeros(3), cell)
    assert "x" in info.value.operands and "h" in info.value.operands
    with pytest.raises(ShapeError):
        lstm_cell(torch.zeros(2), torch.zeros(3), torch.zeros(2), LSTMCell(2, 3))


def test_outputs_bounded():
    gen = make_generator(3, "bounded")
    gru, lstm = GRUCell(4, 5), LSTMCell(4, 5)
    with torch.no_grad():
        for p in list(gru.parameters()) + list(lstm.parameters()):
            p.copy_(torch.randn(p.shape, generator=gen) * 5.0)
    x = torch.randn(16, 4, generator=gen) * 10.0
    h = torch.rand(16, 5, generator=gen) * 2.0 - 1.0
    c = torch.randn(16, 5, generator=gen) * 3.0
    assert gru_cell(x, h, gru).abs().max() <= 1.0
    h_next, _ = lstm_cell(x, h, c, lstm)
    assert h_next.abs().max() <= 1.0


@pytest.mark.parametrize("kind", ["gru", "lstm"])
def test_cell_gradients_match_finite_differences(kind):
    for instance in range(100):
        gen = make_generator(instance, "cell-gradcheck", kind)
        dims = torch.randint(1, 9, (2,), generator=gen).tolist()
        cell = GRUCell(*dims) if kind == "gru" else LSTMCell(*dims)
        inputs = ParamHolder(x=torch.randn(dims[0], generator=gen),
                             h=torch.rand(dims[1], generator=gen) * 2 - 1,
                             c=torch.randn(dims[1], generator=gen))
        params = ParameterSet({"cell": cell, "inputs": inputs})
        params.initialize(gen)
        weights = torch.randn(dims[1], generator=gen)

        def loss():
            if kind == "gru":
                out = gru_cell(inputs.x, inputs.h, cell)
            else:
                h, c = lstm_cell(inputs.x, inputs.h, inputs.c, cell)
                out = h + 0.5 * c
            return (out * weights).sum()

        result = check_gradients(loss, params)
        assert result.passed(1e-4), f"{kind} instance {instance}: {result.relative_error}"


if __name__ == "__main__":
    print("\n" + "=" * 70)
    print("Recurrent cell tests")
    print("=" * 70)
    test_gru_zero_weights_halves_hidden()
    test_gru_zero_fixed_point()
    test_lstm_zero_weights()
    test_shape_mismatch_names_operands()
    test_outputs_bounded()
    test_cell_gradients_match_finite_differences("gru")
    test_cell_gradients_match_finite_differences("lstm")
    print("✓ All cell tests passed")
