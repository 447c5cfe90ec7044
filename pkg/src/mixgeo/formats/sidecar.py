"""Raw real-valued image sidecar stored next to a PGM.

Layout: a 16-byte little-endian header (magic ``MGD0``, width and height as
uint32, one reserved uint32 set to 0) followed by ``width * height`` float64
values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..grid import ImageGrid
from . import write_bytes_atomic

MAGIC = b"MGD0"
SUFFIX = ".mgd"
_HEADER = struct.Struct("<4sIII")


class SidecarFormatError(ValueError):
    """Raised for a sidecar with a bad magic, header or payload length."""


def sidecar_path(image_path: Path) -> Path:
    """``noisy.pgm`` → ``noisy.mgd``."""
    return Path(image_path).with_suffix(SUFFIX)


def encode_sidecar(img: ImageGrid) -> bytes:
    header = _HEADER.pack(MAGIC, img.width, img.height, 0)
    return header + img.data.astype("<f8").tobytes(order="C")


def decode_sidecar(data: bytes) -> ImageGrid:
    if len(data) < _HEADER.size:
        raise SidecarFormatError(
            f"Sidecar header needs {_HEADER.size} bytes, found {len(data)}"
        )
    magic, width, height, _reserved = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SidecarFormatError(f"Bad sidecar magic {magic!r}, expected {MAGIC!r}")
    if width == 0 or height == 0:
        raise SidecarFormatError(f"Sidecar dimensions must be positive, got {width}x{height}")

    payload = data[_HEADER.size :]
    expected = width * height * 8
    if len(payload) != expected:
        raise SidecarFormatError(
            f"Sidecar payload is {len(payload)} bytes, expected {expected} for {width}x{height}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(height, width)
    return ImageGrid(values.astype(np.float64))


def read_sidecar(path: Path) -> ImageGrid:
    return decode_sidecar(Path(path).read_bytes())


def write_sidecar(img: ImageGrid, path: Path) -> None:
    write_bytes_atomic(Path(path), encode_sidecar(img))
