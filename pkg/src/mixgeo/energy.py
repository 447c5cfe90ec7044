"""Mixed geometry energy: area + squared mean curvature + multiplicative fidelity.

The functional is::

    E(u) = Σ (α + b κ²) · sqrt(1 + |∇u|²) · ΔxΔy  +  η Σ (u - f log u) · ΔxΔy

and its first variation::

    E'(u) = -div(g ∇u) + 2b div(V) + η (1 - f/u),   g = (α + b κ²) / sqrt(1 + |∇u|²)

Fluxes are evaluated on the faces between pixels (forward difference across the
face, minmod-limited central difference along it) and divided back onto pixels
with a face-difference divergence whose boundary faces carry zero flux.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
import structlog

from .grid import ImageGrid, face_gradient, gaussian_convolve, grad_magnitude_sq, shift

log = structlog.get_logger()

IndicatorMode = Literal["adaptive", "constant"]

# Iterates are kept at or above this value (8-bit intensity scale) so that
# log u and f/u stay finite.
POSITIVITY_FLOOR = 1e-3

MODEL_PRESETS = ("mixed", "adaptive-minimal-surface", "elastica", "minimal-surface")


class IndicatorError(ValueError):
    """Raised when the gray-level indicator cannot be normalized."""


class NonPositiveImageError(ValueError):
    """Raised when an iterate has pixels <= 0 where log u or f/u is needed."""


@dataclass(frozen=True)
class IndicatorSpec:
    """Gray-level indicator ``α = ((G_σ * u) / M)^p`` or a constant weight."""

    sigma: float = 2.0
    p: float = 1.0
    mode: IndicatorMode = "adaptive"
    value: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("adaptive", "constant"):
            raise ValueError(f"Unknown indicator mode {self.mode!r}")
        if self.mode == "adaptive":
            if not self.sigma > 0:
                raise ValueError(f"Indicator sigma must be positive, got {self.sigma}")
            if not self.p > 0:
                raise ValueError(f"Indicator exponent p must be positive, got {self.p}")
        elif not 0 < self.value <= 1:
            raise ValueError(f"Constant indicator value must lie in (0, 1], got {self.value}")

    @classmethod
    def constant(cls, value: float) -> IndicatorSpec:
        """Spatially constant weight; ``sigma`` and ``p`` are ignored."""
        return cls(mode="constant", value=value)


@dataclass(frozen=True)
class ModelWeights:
    """Curvature weight ``b``, fidelity weight ``η`` and the indicator.

    ``refresh_alpha`` recomputes α from the current iterate every step instead of
    freezing it from the noisy input.
    """

    b: float = 0.01
    eta: float = 0.01
    indicator: IndicatorSpec = field(default_factory=IndicatorSpec)
    refresh_alpha: bool = False
    floor: float = POSITIVITY_FLOOR

    def __post_init__(self) -> None:
        if not self.b >= 0:
            raise ValueError(f"Curvature weight b must be >= 0, got {self.b}")
        if not self.eta > 0:
            raise ValueError(f"Fidelity weight eta must be > 0, got {self.eta}")
        if not self.floor > 0:
            raise ValueError(f"Positivity floor must be > 0, got {self.floor}")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Regularizer and fidelity parts of ``E(u)``."""

    regularizer: float
    fidelity: float

    @property
    def total(self) -> float:
        """``regularizer + fidelity``."""
        return self.regularizer + self.fidelity


def model_preset(name: str, *, b: float = 0.01, eta: float = 0.01) -> ModelWeights:
    """Weights for the model and its degenerate cases.

    ``mixed`` (adaptive α, b > 0), ``adaptive-minimal-surface`` (adaptive α, b = 0),
    ``elastica`` (constant α, b > 0) and ``minimal-surface`` (constant α, b = 0).
    """
    if name == "mixed":
        return ModelWeights(b=b, eta=eta)
    if name == "adaptive-minimal-surface":
        return ModelWeights(b=0.0, eta=eta)
    if name == "elastica":
        return ModelWeights(b=b, eta=eta, indicator=IndicatorSpec.constant(0.5))
    if name == "minimal-surface":
        return ModelWeights(b=0.0, eta=eta, indicator=IndicatorSpec.constant(1.0))
    raise ValueError(f"Unknown model preset {name!r}; expected one of {', '.join(MODEL_PRESETS)}")


def with_indicator(weights: ModelWeights, indicator: IndicatorSpec) -> ModelWeights:
    """Copy of ``weights`` using another indicator."""
    return replace(weights, indicator=indicator)


def require_positive(u: np.ndarray, name: str = "u") -> None:
    """Reject iterates with any pixel <= 0."""
    if not np.all(u > 0):
        raise NonPositiveImageError(
            f"{name} must be strictly positive (min {float(np.min(u)):.6g}); "
            "clamp iterates to the positivity floor first"
        )


def clamp_to_floor(u: np.ndarray, floor: float = POSITIVITY_FLOOR) -> np.ndarray:
    """``max(u, floor)`` pixelwise."""
    return np.maximum(u, floor)


def gray_level_indicator(noisy: ImageGrid, spec: IndicatorSpec) -> ImageGrid:
    """Normalized smoothed intensity weighting the area term.

    Raises:
        IndicatorError: In adaptive mode, for negative pixels or an all-zero image.
    """
    if spec.mode == "constant":
        return noisy.with_data(np.full(noisy.shape, spec.value))

    if np.any(noisy.data < 0):
        raise IndicatorError("Indicator input has negative pixels")
    smoothed = gaussian_convolve(noisy, spec.sigma).data
    peak = float(smoothed.max())
    if peak <= 0:
        raise IndicatorError("Indicator input is all zero; cannot normalize by its maximum")
    alpha = np.clip(smoothed / peak, 0.0, 1.0) ** spec.p
    log.debug(
        "indicator_computed",
        sigma=spec.sigma,
        p=spec.p,
        alpha_min=float(alpha.min()),
        alpha_mean=float(alpha.mean()),
    )
    return noisy.with_data(alpha)


def face_divergence(flux: np.ndarray, axis: int, spacing: float = 1.0) -> np.ndarray:
    """``F_{i+½} - F_{i-½}`` with zero flux through the boundary faces.

    ``flux[i]`` is the face between pixels ``i`` and ``i+1``; its last entry is
    the outer boundary face and must already be zero.
    """
    return np.diff(flux, axis=axis, prepend=0.0) / spacing


def curvature_array(u: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """Mean curvature of the image graph with the staggered minmod stencil."""
    kappa = np.zeros_like(u)
    for axis in (1, 0):
        normal, transverse = face_gradient(u, axis, spacing)
        unit_flux = normal / np.sqrt(1.0 + normal * normal + transverse * transverse)
        kappa = kappa + face_divergence(unit_flux, axis, spacing)
    return kappa


def area_density_array(u: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """``sqrt(1 + |∇u|²)`` with central differences."""
    return np.sqrt(1.0 + grad_magnitude_sq(ImageGrid(u, spacing), "central").data)


def mean_curvature(u: ImageGrid) -> ImageGrid:
    """Divergence of the unit normal of the graph ``z = u(x, y)``.

    A dome (``u`` peaking at the centre) has negative curvature at its apex.
    """
    return u.with_data(curvature_array(u.data, u.spacing))


def area_density(u: ImageGrid) -> ImageGrid:
    """Surface-area element of the image graph."""
    return u.with_data(area_density_array(u.data, u.spacing))


def diffusivity_array(
    u: np.ndarray,
    alpha: np.ndarray,
    b: float,
    spacing: float = 1.0,
    *,
    kappa: np.ndarray | None = None,
    area: np.ndarray | None = None,
) -> np.ndarray:
    """Pixel diffusivity ``g = (α + b κ²) / sqrt(1 + |∇u|²)``."""
    if kappa is None:
        kappa = curvature_array(u, spacing)
    if area is None:
        area = area_density_array(u, spacing)
    return (alpha + b * kappa * kappa) / area


def face_average(values: np.ndarray, axis: int) -> np.ndarray:
    """Arithmetic mean of the two pixels sharing each face ``i+½``."""
    return 0.5 * (values + shift(values, 1, axis))


def diffusion_divergence(u: np.ndarray, g: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """``div(g ∇u)`` with face diffusivities averaged from pixel values."""
    total = np.zeros_like(u)
    for axis in (1, 0):
        normal, _ = face_gradient(u, axis, spacing)
        total = total + face_divergence(face_average(g, axis) * normal, axis, spacing)
    return total


def curvature_transport_divergence(
    u: np.ndarray,
    kappa: np.ndarray,
    spacing: float = 1.0,
    *,
    area: np.ndarray | None = None,
) -> np.ndarray:
    """``div(V)`` with ``V = (I - P) ∇(κ sqrt(1+|∇u|²)) / sqrt(1+|∇u|²)``.

    On a face with normal component ``n`` and transverse ``t``::

        V_n = Ψ_n / A - (Ψ_n u_n + Ψ_t u_t) u_n / A³,   A = sqrt(1 + u_n² + u_t²)

    where ``Ψ = κ sqrt(1+|∇u|²)``.
    """
    if area is None:
        area = area_density_array(u, spacing)
    psi = kappa * area
    total = np.zeros_like(u)
    for axis in (1, 0):
        u_n, u_t = face_gradient(u, axis, spacing)
        psi_n, psi_t = face_gradient(psi, axis, spacing)
        face_area = np.sqrt(1.0 + u_n * u_n + u_t * u_t)
        projection = (psi_n * u_n + psi_t * u_t) * u_n / (face_area * face_area * face_area)
        total = total + face_divergence(psi_n / face_area - projection, axis, spacing)
    return total


def fidelity_gradient(u: np.ndarray, f: np.ndarray, eta: float) -> np.ndarray:
    """``η (1 - f/u)``."""
    return eta * (1.0 - f / u)


def _alpha_for(u: ImageGrid, weights: ModelWeights, alpha: ImageGrid | None) -> np.ndarray:
    if alpha is not None:
        if alpha.shape != u.shape:
            raise ValueError(f"Indicator shape {alpha.shape} does not match image {u.shape}")
        return alpha.data
    return gray_level_indicator(u, weights.indicator).data


def _check_pair(u: ImageGrid, f: ImageGrid) -> None:
    if u.shape != f.shape:
        raise ValueError(f"Iterate shape {u.shape} does not match data shape {f.shape}")
    require_positive(u.data)


def total_energy(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    alpha: ImageGrid | None = None,
) -> EnergyBreakdown:
    """Evaluate ``E(u)``.

    Args:
        u: Current iterate, strictly positive.
        f: Noisy data.
        weights: Model weights.
        alpha: Frozen indicator; computed from ``u`` when omitted.

    Raises:
        NonPositiveImageError: If any ``u`` pixel is <= 0.
    """
    _check_pair(u, f)
    h = u.spacing
    alpha_values = _alpha_for(u, weights, alpha)
    kappa = curvature_array(u.data, h)
    area = area_density_array(u.data, h)
    return _breakdown(u, f, weights, alpha_values, kappa, area)


def euler_lagrange(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    alpha: ImageGrid | None = None,
) -> ImageGrid:
    """First variation ``E'(u)`` with α treated as a fixed weighting function.

    Raises:
        NonPositiveImageError: If any ``u`` pixel is <= 0.
    """
    _check_pair(u, f)
    h = u.spacing
    alpha_values = _alpha_for(u, weights, alpha)
    kappa = curvature_array(u.data, h)
    area = area_density_array(u.data, h)
    return u.with_data(_gradient(u, f, weights, alpha_values, kappa, area))


def _gradient(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    alpha_values: np.ndarray,
    kappa: np.ndarray,
    area: np.ndarray,
) -> np.ndarray:
    h = u.spacing
    g = diffusivity_array(u.data, alpha_values, weights.b, h, kappa=kappa, area=area)
    diffusion = diffusion_divergence(u.data, g, h)
    transport = curvature_transport_divergence(u.data, kappa, h, area=area)
    gradient = -diffusion + 2.0 * weights.b * transport
    return gradient + fidelity_gradient(u.data, f.data, weights.eta)


def energy_and_gradient(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    alpha: ImageGrid | None = None,
) -> tuple[EnergyBreakdown, ImageGrid]:
    """``E(u)`` and ``E'(u)`` sharing one curvature and area evaluation.

    Produces the same numbers as :func:`total_energy` and :func:`euler_lagrange`.
    """
    _check_pair(u, f)
    h = u.spacing
    alpha_values = _alpha_for(u, weights, alpha)
    kappa = curvature_array(u.data, h)
    area = area_density_array(u.data, h)

    breakdown = _breakdown(u, f, weights, alpha_values, kappa, area)

    gradient = _gradient(u, f, weights, alpha_values, kappa, area)
    return breakdown, u.with_data(gradient)


def _breakdown(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    alpha_values: np.ndarray,
    kappa: np.ndarray,
    area: np.ndarray,
) -> EnergyBreakdown:
    regularizer = float(np.sum((alpha_values + weights.b * kappa * kappa) * area)) * u.cell_area
    # f = 0 pixels contribute only u, since u >= floor keeps log u finite.
    fidelity_density = u.data - f.data * np.log(u.data)
    fidelity = weights.eta * float(np.sum(fidelity_density)) * u.cell_area
    return EnergyBreakdown(regularizer=regularizer, fidelity=fidelity)
