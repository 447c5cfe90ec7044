"""Binary portable graymap (``P5``, maxval 255)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import structlog

from ..grid import ImageGrid
from . import write_bytes_atomic

log = structlog.get_logger()

MAGIC = b"P5"
MAXVAL = 255
_WHITESPACE = b" \t\n\r\v\f"


class PgmFormatError(ValueError):
    """Base class for unreadable PGM files."""


class PgmMagicError(PgmFormatError):
    """The file does not start with ``P5``."""


class PgmHeaderError(PgmFormatError):
    """Width, height or maxval is missing or malformed."""


class PgmMaxvalError(PgmFormatError):
    """The maxval is not 255."""


class PgmTruncatedError(PgmFormatError):
    """The raster is shorter than ``width * height`` bytes."""


def _header_fields(data: bytes) -> tuple[list[int], int]:
    """Parse width, height and maxval; return them with the raster offset."""
    pos = len(MAGIC)
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data):
            byte = data[pos : pos + 1]
            if byte in _WHITESPACE:
                pos += 1
            elif byte == b"#":
                newline = data.find(b"\n", pos)
                pos = len(data) if newline == -1 else newline + 1
            else:
                break
        if pos >= len(data):
            raise PgmHeaderError(f"PGM header ended after {len(fields)} of 3 fields")

        start = pos
        while pos < len(data) and data[pos : pos + 1] not in _WHITESPACE + b"#":
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise PgmHeaderError(f"PGM header field {token[:16]!r} is not a positive integer")
        fields.append(int(token))

    # Exactly one whitespace byte separates maxval from the raster.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise PgmHeaderError("PGM header is missing the whitespace byte after maxval")
    return fields, pos + 1


def decode_pgm(data: bytes) -> ImageGrid:
    """Decode a ``P5`` file image held in memory.

    Raises:
        PgmMagicError: Wrong magic number.
        PgmHeaderError: Malformed header or zero dimensions.
        PgmMaxvalError: Maxval other than 255.
        PgmTruncatedError: Raster shorter than the header promises.
    """
    if data[: len(MAGIC)] != MAGIC:
        raise PgmMagicError(f"Not a binary PGM: magic {data[:2]!r}, expected {MAGIC!r}")

    (width, height, maxval), offset = _header_fields(data)
    if width == 0 or height == 0:
        raise PgmHeaderError(f"PGM dimensions must be positive, got {width}x{height}")
    if maxval != MAXVAL:
        raise PgmMaxvalError(f"Unsupported PGM maxval {maxval}; only {MAXVAL} is accepted")

    expected = width * height
    raster = data[offset : offset + expected]
    if len(raster) < expected:
        raise PgmTruncatedError(
            f"PGM raster truncated: expected {expected} bytes, found {len(raster)}"
        )
    if len(data) > offset + expected:
        log.debug("pgm_trailing_bytes", count=len(data) - offset - expected)

    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return ImageGrid(pixels.astype(np.float64))


def encode_pgm(img: ImageGrid) -> bytes:
    """Round to the nearest integer, clamp to ``[0, 255]`` and encode as ``P5``."""
    pixels = np.clip(np.rint(img.data), 0, MAXVAL).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n{MAXVAL}\n".encode("ascii")
    return header + pixels.tobytes()


def read_pgm(path: Path) -> ImageGrid:
    """Read a ``P5`` file."""
    return decode_pgm(Path(path).read_bytes())


def write_pgm(img: ImageGrid, path: Path) -> None:
    """Write ``img`` as ``P5``, replacing ``path`` atomically."""
    write_bytes_atomic(Path(path), encode_pgm(img))
    log.debug("pgm_written", path=str(path), shape=img.shape)
