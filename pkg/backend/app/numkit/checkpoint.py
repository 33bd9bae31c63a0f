"""Named-tensor checkpoint container.

Layout (little-endian)::

    b"SEQATTR1"  u32 version  u32 count
    count x ( u16 name_len  name  u8 dtype  u8 rank  rank x u32 dim  float64 data )

dtype tag 0 is the only one defined (float64). Model parameters use their
``named_parameters`` names; optimizer state lives under ``adam/`` and run
metadata under ``meta/``.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from ..config.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from ..exceptions import CheckpointError, CheckpointVersionError

DTYPE_FLOAT64 = 0


def encode_checkpoint(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(tensors))]
    for name, array in tensors.items():
        array = np.ascontiguousarray(array, dtype="<f8")
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF or array.ndim > 0xFF:
            raise CheckpointError(f"tensor '{name}' cannot be stored", details={"name": name})
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", DTYPE_FLOAT64, array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.tobytes())
    return b"".join(chunks)


def decode_checkpoint(data: bytes, path: str = "<memory>") -> Dict[str, np.ndarray]:
    """Parse checkpoint bytes into an insertion-ordered name → array dict.

    Raises:
        CheckpointError: On a bad magic, truncated payload or unknown dtype.
        CheckpointVersionError: On an unsupported format version.
    """
    magic_len = len(CHECKPOINT_MAGIC)
    if data[:magic_len] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a seqattr checkpoint", path=path)
    offset = magic_len
    try:
        version, count = struct.unpack_from("<II", data, offset)
        offset += 8
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"checkpoint version {version} is not supported",
                path=path,
                details={"version": version, "supported": CHECKPOINT_VERSION},
            )
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset:offset + name_len].decode("utf-8")
            offset += name_len
            dtype, rank = struct.unpack_from("<BB", data, offset)
            offset += 2
            if dtype != DTYPE_FLOAT64:
                raise CheckpointError(
                    f"tensor '{name}' has unknown dtype tag {dtype}", path=path
                )
            shape = struct.unpack_from(f"<{rank}I", data, offset)
            offset += 4 * rank
            nbytes = 8 * int(np.prod(shape, dtype=np.int64))
            if offset + nbytes > len(data):
                raise CheckpointError(f"tensor '{name}' is truncated", path=path)
            tensors[name] = (
                np.frombuffer(data, dtype="<f8", count=nbytes // 8, offset=offset)
                .astype(np.float64)
                .reshape(shape)
            )
            offset += nbytes
    except struct.error as exc:
        raise CheckpointError(f"checkpoint is truncated: {exc}", path=path) from exc
    if offset != len(data):
        raise CheckpointError("trailing bytes after the last tensor", path=path)
    return tensors


def save_checkpoint(path: Union[str, Path], tensors: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(tensors))
    return path


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError("checkpoint file does not exist", path=str(path))
    return decode_checkpoint(path.read_bytes(), path=str(path))
