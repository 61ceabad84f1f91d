"""
GRU sequence encoder used by the consistency loss
File: src/consistency/encoder.py
"""
import torch
import torch.nn as nn
from loguru import logger

from src.diffcore.cells import GRUCell, gru_cell

ENCODING_DIM = 32
TRAINED = "trained"
FROZEN = "frozen"


class SeqEncoder(nn.Module):
    """
    enc(s_1:k) = final GRU hidden state, consumed in time order from h_0 = 0

    In "frozen" mode the (randomly initialized) weights never receive updates,
    which turns the encoder into a fixed random recurrent projection.
    """

    def __init__(self, input_dim: int, hidden_size: int = ENCODING_DIM, mode: str = TRAINED):
        super().__init__()
        if mode not in (TRAINED, FROZEN):
            raise ValueError(f"encoder mode must be {TRAINED!r} or {FROZEN!r}, got {mode!r}")
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self.mode = mode
        self.cell = GRUCell(input_dim, hidden_size)
        if mode == FROZEN:
            self.cell.requires_grad_(False)
        logger.debug(f"SeqEncoder initialized ({input_dim} -> {hidden_size}, {mode})")

    def forward(self, states: torch.Tensor) -> torch.Tensor:
        """(..., k, d) -> (..., hidden)"""
        h = torch.zeros(states.shape[:-2] + (self.hidden_size,), dtype=states.dtype)
        for t in range(states.shape[-2]):
            h = gru_cell(states[..., t, :], h, self.cell)
        return h


def encode_sequence(encoder: nn.Module, states: torch.Tensor) -> torch.Tensor:
    """Fixed-length encoding of a state sequence (k >= 1)"""
    if states.dim() < 2 or states.shape[-2] < 1:
        raise ValueError(f"encode_sequence needs at least one step, got shape {tuple(states.shape)}")
    return encoder(states)
