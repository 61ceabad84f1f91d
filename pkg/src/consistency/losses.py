"""
Consistency loss and the total objective
File: src/consistency/losses.py
"""
from typing import List, Optional

import torch
import torch.nn as nn
from loguru import logger

from src.consistency.encoder import encode_sequence
from src.consistency.rollouts import RolloutPair
from src.utils.errors import ConfigurationError, ShapeError

COLLAPSE_THRESHOLD = 1e-4


def _safe_norm(sq: torch.Tensor) -> torch.Tensor:
    # sqrt has an infinite derivative at 0; route zeros around it
    positive = sq > 0
    root = torch.sqrt(torch.where(positive, sq, torch.ones_like(sq)))
    return torch.where(positive, root, torch.zeros_like(sq))


def encode_real(encoder: nn.Module, real_states: torch.Tensor) -> torch.Tensor:
    """Encoding of the real branch, outside the graph"""
    with torch.no_grad():
        return encode_sequence(encoder, real_states.detach())


def consistency_loss(encoder: nn.Module, real_states: torch.Tensor,
                     imagined_states: torch.Tensor,
                     real_code: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    l_cc = || enc(s_1:k) - enc(s^I_1:k) ||_2, averaged over a leading batch dim

    The real branch is encoded without gradient. `real_code` supplies that
    encoding directly; it then stays fixed when the encoder weights move.
    """
    if real_states.shape != imagined_states.shape:
        raise ShapeError("consistency_loss", real=real_states.shape, imagined=imagined_states.shape)
    if real_code is None:
        real_code = encode_real(encoder, real_states)
    imagined_code = encode_sequence(encoder, imagined_states)
    distance = _safe_norm(((real_code - imagined_code) ** 2).sum(-1))
    return distance.mean()


def pairs_consistency_loss(encoder: nn.Module, pairs: List[RolloutPair]) -> torch.Tensor:
    """Mean l_cc over pairs; pairs of equal length are encoded as one batch"""
    if not pairs:
        return torch.zeros((), dtype=torch.float64)
    by_length = {}
    for pair in pairs:
        by_length.setdefault(pair.length, []).append(pair)
    total = torch.zeros((), dtype=torch.float64)
    for length in sorted(by_length):
        group = by_length[length]
        real = torch.stack([p.real_states for p in group])
        imagined = torch.stack([p.imagined_states for p in group])
        total = total + consistency_loss(encoder, real, imagined) * len(group)
    return total / len(pairs)


def collapse_monitor(encoder: nn.Module, real_sequences: torch.Tensor) -> float:
    """
    Batch standard deviation of real-sequence encodings (mean over coordinates)

    A trained encoder can reach l_cc = 0 by emitting a constant; this number
    going to zero is the symptom.
    """
    if real_sequences.shape[0] < 2:
        return 0.0
    with torch.no_grad():
        codes = encode_sequence(encoder, real_sequences)
        spread = float(codes.std(0, unbiased=False).mean())
    if spread < COLLAPSE_THRESHOLD:
        logger.warning(f"Sequence encoder collapse suspected: encoding std {spread:.2e}")
    return spread


def total_loss(l_rl: torch.Tensor, l_cc: torch.Tensor, alpha: float) -> torch.Tensor:
    """l_total = l_rl + alpha * l_cc; alpha = 0 returns l_rl itself"""
    if alpha < 0:
        raise ConfigurationError(f"alpha must be >= 0, got {alpha}", key="alpha")
    if alpha == 0:
        return l_rl
    return l_rl + alpha * l_cc
