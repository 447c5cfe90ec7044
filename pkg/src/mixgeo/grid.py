"""Image grid, Neumann ghost cells and finite-difference operators.

Every operator here is pure: inputs are never modified and each call returns a
fresh buffer. Out-of-range neighbours are read by clamping the index to the
nearest in-range pixel, which is the discrete Neumann condition
``u[-1] = u[0]``, ``u[n] = u[n-1]``.

Arrays are indexed ``[row, column]``; the ``x`` axis runs along columns
(array axis 1) and the ``y`` axis along rows (array axis 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
from scipy.ndimage import correlate1d

Axis = Literal["x", "y"]
DifferenceScheme = Literal["forward", "backward", "central"]
GradientScheme = Literal["central", "staggered"]

_ARRAY_AXIS: dict[str, int] = {"x": 1, "y": 0}


class GridError(ValueError):
    """Raised when an image grid or an operator argument is invalid."""


class GhostPolicy(Enum):
    """How pixels outside the image are read."""

    NEUMANN_REPLICATE = "neumann-replicate"


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """A 2-D scalar field on a uniform grid.

    ``data`` has shape ``(height, width)`` and is stored read-only; intensities
    live on the 8-bit scale ``[0, 255]`` but are not clamped to it.
    """

    data: np.ndarray
    spacing: float = 1.0

    def __post_init__(self) -> None:
        array = np.array(self.data, dtype=np.float64, copy=True, order="C")
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise GridError(f"Image data must be a non-empty 2-D array, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise GridError("Image data contains NaN or infinite values")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise GridError(f"Grid spacing must be positive, got {self.spacing}")
        array.setflags(write=False)
        object.__setattr__(self, "data", array)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def width(self) -> int:
        """Number of columns."""
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        """Number of rows."""
        return int(self.data.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        """``(height, width)``."""
        return (self.height, self.width)

    @property
    def pixel_count(self) -> int:
        """``width * height``."""
        return self.width * self.height

    @property
    def cell_area(self) -> float:
        """``Δx·Δy``."""
        return self.spacing * self.spacing

    def with_data(self, data: np.ndarray) -> ImageGrid:
        """Return a grid with the same spacing and new pixel values."""
        return ImageGrid(data, self.spacing)

    @classmethod
    def constant(cls, height: int, width: int, value: float, spacing: float = 1.0) -> ImageGrid:
        """Build an image where every pixel equals ``value``."""
        return cls(np.full((height, width), float(value)), spacing)


def array_axis(axis: Axis) -> int:
    """Map ``"x"``/``"y"`` to the numpy axis index."""
    try:
        return _ARRAY_AXIS[axis]
    except KeyError:
        raise GridError(f"Unknown axis {axis!r}; expected 'x' or 'y'") from None


def shift(values: np.ndarray, offset: int, axis: int) -> np.ndarray:
    """Read ``values[i + offset]`` along ``axis`` with clamped (replicated) indices."""
    n = values.shape[axis]
    index = np.clip(np.arange(n) + offset, 0, n - 1)
    return np.take(values, index, axis=axis)


def diff_forward(values: np.ndarray, axis: int, spacing: float = 1.0) -> np.ndarray:
    """``Δ₊ u_i = u_{i+1} - u_i`` (zero on the last line)."""
    return (shift(values, 1, axis) - values) / spacing


def diff_backward(values: np.ndarray, axis: int, spacing: float = 1.0) -> np.ndarray:
    """``Δ₋ u_i = u_i - u_{i-1}`` (zero on the first line)."""
    return (values - shift(values, -1, axis)) / spacing


def diff_central(values: np.ndarray, axis: int, spacing: float = 1.0) -> np.ndarray:
    """``Δc u_i = (u_{i+1} - u_{i-1}) / 2``."""
    return (shift(values, 1, axis) - shift(values, -1, axis)) / (2.0 * spacing)


def minmod(a, b):
    """Sign-aware minimum-magnitude selector.

    ``((sgn a + sgn b) / 2) · min(|a|, |b|)``; accepts scalars or arrays.
    """
    result = 0.5 * (np.sign(a) + np.sign(b)) * np.minimum(np.abs(a), np.abs(b))
    if np.ndim(result) == 0:
        return float(result)
    return result


def face_gradient(values: np.ndarray, axis: int, spacing: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gradient components on the faces ``i+½`` along ``axis``.

    Returns ``(normal, transverse)``: the forward difference across the face and
    the minmod of the central transverse differences on the two pixels that share
    it. Entry ``i`` holds the face between pixels ``i`` and ``i+1``; the last
    entry is the boundary face, where the normal component is zero.
    """
    other = 1 - axis
    normal = diff_forward(values, axis, spacing)
    transverse_central = diff_central(values, other, spacing)
    transverse = minmod(transverse_central, shift(transverse_central, 1, axis))
    return normal, transverse


def finite_difference(
    img: ImageGrid,
    axis: Axis,
    scheme: DifferenceScheme,
    ghost: GhostPolicy = GhostPolicy.NEUMANN_REPLICATE,
) -> ImageGrid:
    """Apply a one-sided or central difference along one axis."""
    if ghost is not GhostPolicy.NEUMANN_REPLICATE:
        raise GridError(f"Unsupported ghost policy: {ghost}")
    index = array_axis(axis)
    operators = {"forward": diff_forward, "backward": diff_backward, "central": diff_central}
    try:
        operator = operators[scheme]
    except KeyError:
        raise GridError(f"Unknown difference scheme {scheme!r}") from None
    return img.with_data(operator(img.data, index, img.spacing))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 1-D Gaussian with radius ``ceil(3σ)``, normalized to sum 1."""
    if not sigma > 0:
        raise GridError(f"Gaussian sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def gaussian_convolve(img: ImageGrid, sigma: float) -> ImageGrid:
    """Separable Gaussian smoothing with replicated borders."""
    kernel = gaussian_kernel(sigma)
    smoothed = correlate1d(img.data, kernel, axis=0, mode="nearest")
    smoothed = correlate1d(smoothed, kernel, axis=1, mode="nearest")
    return img.with_data(smoothed)


def grad_magnitude_sq(
    img: ImageGrid,
    scheme: GradientScheme = "central",
    axis: Axis = "x",
) -> ImageGrid:
    """``|∇u|²`` per pixel.

    ``central`` uses ``(Δc^x u)² + (Δc^y u)²`` at the pixel centre. ``staggered``
    evaluates the face ``i+½`` along ``axis``: the squared forward difference plus
    the squared minmod-limited transverse central difference, the quantity that
    sits under the square root in the curvature stencil.
    """
    u = img.data
    h = img.spacing
    if scheme == "central":
        gx = diff_central(u, 1, h)
        gy = diff_central(u, 0, h)
        return img.with_data(gx * gx + gy * gy)
    if scheme == "staggered":
        normal, transverse = face_gradient(u, array_axis(axis), h)
        return img.with_data(normal * normal + transverse * transverse)
    raise GridError(f"Unknown gradient scheme {scheme!r}")
