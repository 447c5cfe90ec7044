"""Multiplicative gamma (speckle) noise: density and seeded synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.special import gammaln

from .grid import ImageGrid

log = structlog.get_logger()


class NoiseModelError(ValueError):
    """Raised for an invalid noise level or a negative clean image."""


@dataclass(frozen=True)
class GammaNoiseSpec:
    """Noise level ``L`` (number of looks) and generator seed."""

    looks: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.looks > 0 and math.isfinite(self.looks)):
            raise NoiseModelError(f"Number of looks must be positive, got {self.looks}")
        if not 0 <= self.seed < 2**64:
            raise NoiseModelError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")


def gamma_pdf(eta: float, looks: float) -> float:
    """Density of ``η ~ Gamma(shape L, scale 1/L)``: mean 1, variance ``1/L``."""
    if not looks > 0:
        raise NoiseModelError(f"Number of looks must be positive, got {looks}")
    if eta < 0:
        return 0.0
    if eta == 0:
        if looks < 1:
            return math.inf
        return 1.0 if looks == 1 else 0.0
    log_density = (
        looks * math.log(looks) + (looks - 1.0) * math.log(eta) - looks * eta - gammaln(looks)
    )
    return math.exp(log_density)


def noise_generator(seed: int) -> np.random.Generator:
    """Counter-based generator so a seed always yields the same stream."""
    return np.random.Generator(np.random.Philox(seed))


def sample_gamma_field(shape: tuple[int, int], spec: GammaNoiseSpec) -> np.ndarray:
    """Draw the ``η`` field in row-major order from a single seeded stream."""
    rng = noise_generator(spec.seed)
    return rng.gamma(shape=spec.looks, scale=1.0 / spec.looks, size=shape)


def apply_multiplicative_noise(clean: ImageGrid, spec: GammaNoiseSpec) -> ImageGrid:
    """Degrade ``clean`` as ``f = u·η``.

    Raises:
        NoiseModelError: If any clean pixel is negative.
    """
    if np.any(clean.data < 0):
        raise NoiseModelError("Clean image has negative pixels; multiplicative noise needs u >= 0")

    eta = sample_gamma_field(clean.shape, spec)
    noisy = np.maximum(clean.data * eta, 0.0)
    log.debug(
        "noise_applied",
        looks=spec.looks,
        seed=spec.seed,
        shape=clean.shape,
        eta_mean=float(eta.mean()),
    )
    return clean.with_data(noisy)
