"""
MLP builder shared by dynamics, policy and value networks
File: src/dynmodel/networks.py
"""
import torch.nn as nn

HIDDEN_UNITS = 64
HIDDEN_LAYERS = 2


def build_mlp(input_size: int, output_size: int, n_layers: int = HIDDEN_LAYERS,
              size: int = HIDDEN_UNITS, activation=nn.Tanh) -> nn.Sequential:
    """n_layers tanh hidden layers of `size` units, linear output"""
    layers = []
    width = input_size
    for _ in range(n_layers):
        layers += [nn.Linear(width, size), activation()]
        width = size
    layers.append(nn.Linear(width, output_size))
    return nn.Sequential(*layers)
