"""SIMG raw image container.

Layout: ``b"SIMG1"``, u16 height, u16 width, u8 channels (little-endian), then
height × width × channels bytes in row-major HWC order.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..config.constants import IMAGE_MAGIC
from ..exceptions import ImageFormatError

_HEADER = struct.Struct("<HHB")


def encode_simg(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.ndim != 3 or image.dtype != np.uint8:
        raise ImageFormatError(f"SIMG stores uint8 H×W×C arrays, got {image.dtype} {image.shape}")
    height, width, channels = image.shape
    if max(height, width) > 0xFFFF or channels > 0xFF:
        raise ImageFormatError(f"image of shape {image.shape} is too large for SIMG")
    return IMAGE_MAGIC + _HEADER.pack(height, width, channels) + np.ascontiguousarray(image).tobytes()


def decode_simg(data: bytes, path: str = "<memory>") -> np.ndarray:
    if data[: len(IMAGE_MAGIC)] != IMAGE_MAGIC:
        raise ImageFormatError("missing SIMG magic", path=path)
    offset = len(IMAGE_MAGIC)
    if len(data) < offset + _HEADER.size:
        raise ImageFormatError("truncated SIMG header", path=path)
    height, width, channels = _HEADER.unpack_from(data, offset)
    offset += _HEADER.size
    expected = height * width * channels
    if len(data) - offset != expected:
        raise ImageFormatError(
            f"SIMG payload has {len(data) - offset} bytes, header promises {expected}", path=path
        )
    return np.frombuffer(data, dtype=np.uint8, offset=offset).reshape(height, width, channels).copy()


def write_simg(path: Union[str, Path], image: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_simg(image))
    return path


def read_simg(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ImageFormatError("image file does not exist", path=str(path))
    return decode_simg(path.read_bytes(), path=str(path))
