"""
Named random-number streams
File: src/diffcore/rng.py

Every stochastic draw in the package comes from a torch.Generator derived from
(seed, *names), so two runs with the same seed consume identical streams no
matter how work is ordered or split across workers.
"""
import zlib
from typing import Union

import numpy as np
import torch

StreamKey = Union[int, str]


def stream_seed(seed: int, *names: StreamKey) -> int:
    """Derive a 63-bit seed for the stream identified by (seed, *names)"""
    entropy = [int(seed) & 0xFFFFFFFF]
    for name in names:
        if isinstance(name, str):
            entropy.append(zlib.crc32(name.encode("utf-8")))
        else:
            entropy.append(int(name) & 0xFFFFFFFF)
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return ((int(state[0]) << 32) | int(state[1])) & ((1 << 63) - 1)


def make_generator(seed: int, *names: StreamKey) -> torch.Generator:
    """torch.Generator seeded for the named stream"""
    generator = torch.Generator()
    generator.manual_seed(stream_seed(seed, *names))
    return generator


def make_numpy_rng(seed: int, *names: StreamKey) -> np.random.Generator:
    """numpy Generator for the same named stream scheme (environment resets, data splits)"""
    return np.random.default_rng(stream_seed(seed, *names))
