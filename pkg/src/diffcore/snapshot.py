"""
Binary snapshot format for named tensors
File: src/diffcore/snapshot.py

Layout: b"CONDYN1", then per tensor: name length (u32 LE), UTF-8 name,
rank (u32), dims (u32 each), values (f64 LE, row-major).
"""
import os
import struct
from pathlib import Path
from typing import Dict

import numpy as np
import torch
from loguru import logger

from src.utils.errors import SnapshotFormatError

MAGIC = b"CONDYN1"


def encode_snapshot(tensors: Dict[str, torch.Tensor]) -> bytes:
    chunks = [MAGIC]
    for name, tensor in tensors.items():
        encoded = name.encode("utf-8")
        shape = tuple(tensor.shape)
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", len(shape)))
        if shape:
            chunks.append(struct.pack(f"<{len(shape)}I", *shape))
        values = tensor.detach().cpu().to(torch.float64).numpy()
        chunks.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_snapshot(blob: bytes) -> Dict[str, torch.Tensor]:
    if not blob.startswith(MAGIC):
        raise SnapshotFormatError("missing CONDYN1 magic")
    offset = len(MAGIC)
    tensors: Dict[str, torch.Tensor] = {}

    def take(size: int, what: str) -> bytes:
        nonlocal offset
        if offset + size > len(blob):
            raise SnapshotFormatError(f"truncated snapshot while reading {what} at byte {offset}")
        chunk = blob[offset:offset + size]
        offset += size
        return chunk

    while offset < len(blob):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        name = take(name_len, "name").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, f"rank of {name}"))
        shape = struct.unpack(f"<{rank}I", take(4 * rank, f"dims of {name}")) if rank else ()
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(take(8 * count, f"values of {name}"), dtype="<f8")
        if name in tensors:
            raise SnapshotFormatError(f"duplicate tensor name {name}")
        tensors[name] = torch.from_numpy(values.astype(np.float64).reshape(shape))
    return tensors


def save_snapshot(path: str, tensors: Dict[str, torch.Tensor]):
    """Write atomically (temp file + rename) so a crash never leaves a half snapshot"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as handle:
        handle.write(encode_snapshot(tensors))
    os.replace(tmp, path)
    logger.debug(f"Snapshot written: {path} ({len(tensors)} tensors)")


def load_snapshot(path: str) -> Dict[str, torch.Tensor]:
    with open(path, "rb") as handle:
        tensors = decode_snapshot(handle.read())
    logger.debug(f"Snapshot loaded: {path} ({len(tensors)} tensors)")
    return tensors


def split_prefix(tensors: Dict[str, torch.Tensor], prefix: str) -> Dict[str, torch.Tensor]:
    """Sub-dict of tensors under `prefix.`, with the prefix kept"""
    return {name: t for name, t in tensors.items() if name.startswith(prefix + ".")}
