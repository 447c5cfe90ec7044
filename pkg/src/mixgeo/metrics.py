"""Restoration quality metrics on the 8-bit intensity scale."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import structlog
from scipy.ndimage import uniform_filter

from .grid import ImageGrid

log = structlog.get_logger()

SsimMode = Literal["windowed", "global"]

PEAK = 255.0
SSIM_WINDOW = 8
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2


class MetricShapeError(ValueError):
    """Raised when the two images being compared differ in shape."""


@dataclass(frozen=True)
class QualityReport:
    """PSNR in decibels (``inf`` for identical images) and mean SSIM."""

    psnr_db: float
    ssim: float

    def format(self) -> str:
        """One-line summary, e.g. ``PSNR: 26.02, SSIM: 0.7878``."""
        psnr_text = "inf" if math.isinf(self.psnr_db) else f"{self.psnr_db:.2f}"
        return f"PSNR: {psnr_text}, SSIM: {self.ssim:.4f}"


def _check_shapes(reference: ImageGrid, candidate: ImageGrid) -> None:
    if reference.shape != candidate.shape:
        raise MetricShapeError(
            f"Cannot compare images of shape {reference.shape} and {candidate.shape}"
        )


def mean_squared_error(reference: ImageGrid, candidate: ImageGrid) -> float:
    """Per-pixel mean of the squared difference."""
    _check_shapes(reference, candidate)
    difference = reference.data - candidate.data
    return float(np.mean(difference * difference))


def psnr(reference: ImageGrid, candidate: ImageGrid) -> float:
    """``10 log10(255² / MSE)``; ``inf`` when the images are identical."""
    mse = mean_squared_error(reference, candidate)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _ssim_map(mu_x, mu_y, var_x, var_y, cov_xy):
    numerator = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov_xy + SSIM_C2)
    denominator = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return numerator / denominator


def _global_ssim(x: np.ndarray, y: np.ndarray) -> float:
    mu_x = float(np.mean(x))
    mu_y = float(np.mean(y))
    dx = x - mu_x
    dy = y - mu_y
    var_x = float(np.mean(dx * dx))
    var_y = float(np.mean(dy * dy))
    cov_xy = float(np.mean(dx * dy))
    return float(_ssim_map(mu_x, mu_y, var_x, var_y, cov_xy))


def _windowed_ssim(x: np.ndarray, y: np.ndarray, window: int) -> float:
    def local_mean(values: np.ndarray) -> np.ndarray:
        return uniform_filter(values, size=window, mode="nearest")

    mu_x = local_mean(x)
    mu_y = local_mean(y)
    var_x = local_mean(x * x) - mu_x * mu_x
    var_y = local_mean(y * y) - mu_y * mu_y
    cov_xy = local_mean(x * y) - mu_x * mu_y
    ssim_map = _ssim_map(mu_x, mu_y, var_x, var_y, cov_xy)

    # Keep only windows lying fully inside the image.
    start = window // 2
    stop_offset = window - 1 - start
    rows, cols = ssim_map.shape
    valid = ssim_map[start : rows - stop_offset, start : cols - stop_offset]
    return float(np.mean(valid))


def ssim(
    reference: ImageGrid,
    candidate: ImageGrid,
    mode: SsimMode = "windowed",
    window: int = SSIM_WINDOW,
) -> float:
    """Structural similarity.

    ``windowed`` averages SSIM over all ``window x window`` uniform windows at
    stride 1; ``global`` evaluates the formula once with whole-image statistics.
    Images smaller than the window fall back to global statistics.
    """
    _check_shapes(reference, candidate)
    x = reference.data
    y = candidate.data
    if mode == "global":
        return _global_ssim(x, y)
    if mode != "windowed":
        raise ValueError(f"Unknown SSIM mode {mode!r}; expected 'windowed' or 'global'")
    if min(reference.shape) < window:
        log.debug("ssim_global_fallback", shape=reference.shape, window=window)
        return _global_ssim(x, y)
    return _windowed_ssim(x, y, window)


def quality_report(
    reference: ImageGrid,
    candidate: ImageGrid,
    ssim_mode: SsimMode = "windowed",
) -> QualityReport:
    """PSNR and SSIM of ``candidate`` against ``reference``."""
    return QualityReport(
        psnr_db=psnr(reference, candidate),
        ssim=ssim(reference, candidate, mode=ssim_mode),
    )
