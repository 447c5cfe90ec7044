"""Synthetic test images on the 8-bit scale.

All phantoms are strictly positive so multiplicative noise and the fidelity
term stay well defined.
"""

from __future__ import annotations

import numpy as np

from .grid import GridError, ImageGrid

PHANTOM_KINDS: tuple[str, ...] = ("halo", "dartboard", "shapes")

BACKGROUND = 40.0
PEAK = 200.0


def _coordinates(size: int) -> tuple[np.ndarray, np.ndarray]:
    if size < 1:
        raise GridError(f"Phantom size must be >= 1, got {size}")
    centre = (size - 1) / 2.0
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    return (x - centre) / size, (y - centre) / size


def halo(size: int = 64) -> ImageGrid:
    """Smooth radial bump: bright centre fading into a dim background."""
    x, y = _coordinates(size)
    radius_sq = x * x + y * y
    bump = np.exp(-radius_sq / (2.0 * 0.2 * 0.2))
    return ImageGrid(BACKGROUND + (PEAK - BACKGROUND) * bump)


def dartboard(size: int = 64, rings: int = 6) -> ImageGrid:
    """Concentric rings alternating between two gray levels."""
    if rings < 1:
        raise GridError(f"Dartboard needs at least one ring, got {rings}")
    x, y = _coordinates(size)
    radius = np.sqrt(x * x + y * y)
    ring_index = np.floor(radius / (0.5 / rings)).astype(int)
    levels = np.where(ring_index % 2 == 0, 170.0, 70.0)
    return ImageGrid(levels)


def shapes(size: int = 64) -> ImageGrid:
    """Piecewise-constant scene: a square, a disk and a triangle on a flat background."""
    x, y = _coordinates(size)
    image = np.full((size, size), 60.0)

    square = (np.abs(x + 0.2) < 0.15) & (np.abs(y + 0.2) < 0.15)
    image[square] = 180.0

    disk = (x - 0.2) ** 2 + (y - 0.15) ** 2 < 0.18**2
    image[disk] = 130.0

    triangle = (y > -0.35) & (y < -0.05) & (np.abs(x - 0.2) < (y + 0.35) * 0.6)
    image[triangle] = 220.0
    return ImageGrid(image)


def make_phantom(kind: str, size: int = 64) -> ImageGrid:
    """Build the phantom named ``kind``."""
    builders = {"halo": halo, "dartboard": dartboard, "shapes": shapes}
    try:
        builder = builders[kind]
    except KeyError:
        raise ValueError(
            f"Unknown phantom {kind!r}; expected one of {', '.join(PHANTOM_KINDS)}"
        ) from None
    return builder(size)
