"""
Recurrent cells with explicit gate equations
File: src/diffcore/cells.py
"""
from typing import Tuple

import torch
import torch.nn as nn

from src.utils.errors import ShapeError


def _check(op: str, x: torch.Tensor, h: torch.Tensor, w: torch.Tensor, u: torch.Tensor):
    if x.shape[-1] != w.shape[1] or h.shape[-1] != u.shape[0] or x.shape[:-1] != h.shape[:-1]:
        raise ShapeError(op, x=x.shape, h=h.shape, W=w.shape, U=u.shape)


class GRUCell(nn.Module):
    """GRU parameters: update gate z, reset gate r, candidate state"""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        for gate in ("z", "r", "h"):
            self.register_parameter(f"w_{gate}", nn.Parameter(torch.zeros(hidden_size, input_size)))
            self.register_parameter(f"u_{gate}", nn.Parameter(torch.zeros(hidden_size, hidden_size)))
            self.register_parameter(f"b_{gate}", nn.Parameter(torch.zeros(hidden_size)))

    def forward(self, x: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        return gru_cell(x, h, self)


class LSTMCell(nn.Module):
    """LSTM parameters: input, forget, output gates and cell candidate"""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        for gate in ("i", "f", "o", "g"):
            self.register_parameter(f"w_{gate}", nn.Parameter(torch.zeros(hidden_size, input_size)))
            self.register_parameter(f"u_{gate}", nn.Parameter(torch.zeros(hidden_size, hidden_size)))
            self.register_parameter(f"b_{gate}", nn.Parameter(torch.zeros(hidden_size)))

    def forward(self, x: torch.Tensor, h: torch.Tensor,
                c: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        return lstm_cell(x, h, c, self)


def _affine(x, h, w, u, b):
    return x @ w.T + h @ u.T + b


def gru_cell(x: torch.Tensor, h: torch.Tensor, params: GRUCell) -> torch.Tensor:
    """
    One GRU step on (..., input) and (..., hidden) tensors

    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    h_tilde = tanh(W x + U (r * h) + b)
    h' = (1 - z) * h + z * h_tilde
    """
    _check("gru_cell", x, h, params.w_z, params.u_z)
    z = torch.sigmoid(_affine(x, h, params.w_z, params.u_z, params.b_z))
    r = torch.sigmoid(_affine(x, h, params.w_r, params.u_r, params.b_r))
    h_tilde = torch.tanh(_affine(x, r * h, params.w_h, params.u_h, params.b_h))
    return (1.0 - z) * h + z * h_tilde


def lstm_cell(x: torch.Tensor, h: torch.Tensor, c: torch.Tensor,
              params: LSTMCell) -> Tuple[torch.Tensor, torch.Tensor]:
    """One LSTM step; returns (h', c') with c' = f*c + i*g and h' = o*tanh(c')"""
    _check("lstm_cell", x, h, params.w_i, params.u_i)
    if c.shape != h.shape:
        raise ShapeError("lstm_cell", h=h.shape, c=c.shape)
    i = torch.sigmoid(_affine(x, h, params.w_i, params.u_i, params.b_i))
    f = torch.sigmoid(_affine(x, h, params.w_f, params.u_f, params.b_f))
    o = torch.sigmoid(_affine(x, h, params.w_o, params.u_o, params.b_o))
    g = torch.tanh(_affine(x, h, params.w_g, params.u_g, params.b_g))
    c_next = f * c + i * g
    h_next = o * torch.tanh(c_next)
    return h_next, c_next
