"""Semi-implicit additive operator splitting (AOS).

Each step freezes the diffusivity ``g(u)`` and the explicit source ``F(u)``
and solves one tridiagonal system per image row and per image column::

    u_new = ½ Σ_l (I - 2τ D_l)⁻¹ (u + τ F)

``D_l`` is symmetric with zero row sums, so ``I - 2τ D_l`` is a diagonally
dominant M-matrix for every ``τ > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import structlog

from ..energy import (
    ModelWeights,
    area_density_array,
    clamp_to_floor,
    curvature_array,
    curvature_transport_divergence,
    diffusivity_array,
    fidelity_gradient,
    gray_level_indicator,
    require_positive,
)
from ..grid import Axis, GridError, ImageGrid, array_axis
from .base import RunOptions, RunResult, RunTracker, StoppingRule, initial_state, step_alpha

log = structlog.get_logger()

PIVOT_TOLERANCE = 1e-14


class PivotBreakdownError(ArithmeticError):
    """Raised when Thomas elimination meets a vanishing pivot."""


@dataclass(frozen=True)
class AosConfig:
    """Step size, iteration budget and stopping rule."""

    tau: float = 2.0
    max_iters: int = 200
    stop: StoppingRule = field(default_factory=StoppingRule.max_iters)

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"AOS step size tau must be > 0, got {self.tau}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")


@dataclass(frozen=True)
class TridiagonalSystem:
    """``A x = rhs`` with ``A[k, k-1] = sub[k-1]``, ``A[k, k] = diag[k]``, ``A[k, k+1] = sup[k]``."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.diag)
        if n < 1:
            raise ValueError("Tridiagonal system needs at least one unknown")
        if len(self.sub) != n - 1 or len(self.sup) != n - 1 or len(self.rhs) != n:
            raise ValueError(
                f"Inconsistent tridiagonal lengths: sub={len(self.sub)}, diag={n}, "
                f"sup={len(self.sup)}, rhs={len(self.rhs)}"
            )

    @property
    def n(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        """The full ``n x n`` matrix."""
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)


def diffusivity(u: ImageGrid, alpha: ImageGrid, b: float) -> ImageGrid:
    """``g(u) = (α + b κ²) / sqrt(1 + |∇u|²)`` per pixel."""
    if alpha.shape != u.shape:
        raise GridError(f"Indicator shape {alpha.shape} does not match image {u.shape}")
    return u.with_data(diffusivity_array(u.data, alpha.data, b, u.spacing))


def _source_array(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    kappa: np.ndarray,
    area: np.ndarray,
) -> np.ndarray:
    transport = curvature_transport_divergence(u.data, kappa, u.spacing, area=area)
    return -2.0 * weights.b * transport - fidelity_gradient(u.data, f.data, weights.eta)


def source_term(u: ImageGrid, f: ImageGrid, weights: ModelWeights) -> ImageGrid:
    """``F(u) = -2b div(V) - η (1 - f/u)``, the part of ``-E'(u)`` kept explicit.

    Raises:
        NonPositiveImageError: If any ``u`` pixel is <= 0.
    """
    require_positive(u.data)
    kappa = curvature_array(u.data, u.spacing)
    area = area_density_array(u.data, u.spacing)
    return u.with_data(_source_array(u, f, weights, kappa, area))


def _line_coefficients(
    g_lines: np.ndarray, tau: float, spacing: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients of ``I - 2τ D`` for every line of ``g_lines`` (one line per row)."""
    face_g = 0.5 * (g_lines[..., :-1] + g_lines[..., 1:]) / (spacing * spacing)
    weight = 2.0 * tau * face_g
    diag = np.ones_like(g_lines)
    diag[..., :-1] += weight
    diag[..., 1:] += weight
    return -weight, diag, -weight


def _lines(values: np.ndarray, axis: Axis) -> np.ndarray:
    """View of ``values`` with the ``axis`` direction along the last array axis."""
    return values if array_axis(axis) == 1 else values.T


def assemble_direction(
    u: ImageGrid,
    g: ImageGrid,
    axis: Axis,
    tau: float,
    line_index: int,
    source: ImageGrid | None = None,
) -> TridiagonalSystem:
    """System ``(I - 2τ D) x = u + τ F`` for one row (``axis="x"``) or column (``"y"``).

    ``D`` has face weights ``½(g_k + g_{k+1}) / h²``, zero flux through the two
    end faces and ``D[k, k] = -(D[k, k-1] + D[k, k+1])``.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    g_line = _lines(g.data, axis)[line_index]
    rhs = _lines(u.data, axis)[line_index].copy()
    if source is not None:
        rhs = rhs + tau * _lines(source.data, axis)[line_index]
    sub, diag, sup = _line_coefficients(g_line, tau, u.spacing)
    return TridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)


def _check_pivot(pivot: np.ndarray, row: int) -> None:
    if np.any(np.abs(pivot) < PIVOT_TOLERANCE):
        raise PivotBreakdownError(
            f"Thomas pivot below {PIVOT_TOLERANCE:g} at row {row}; the system is not "
            "diagonally dominant"
        )


def thomas_solve_lines(
    sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Solve many independent tridiagonal systems along the last axis at once.

    ``diag`` and ``rhs`` have shape ``(..., n)``; ``sub`` and ``sup`` have shape
    ``(..., n-1)``. Lines never mix, so each solution only depends on its own line.

    Raises:
        PivotBreakdownError: If a pivot magnitude drops below 1e-14.
    """
    n = diag.shape[-1]
    c_prime = np.empty_like(diag)
    d_prime = np.empty(np.broadcast_shapes(diag.shape, rhs.shape))

    pivot = diag[..., 0]
    _check_pivot(pivot, 0)
    if n > 1:
        c_prime[..., 0] = sup[..., 0] / pivot
    d_prime[..., 0] = rhs[..., 0] / pivot

    for k in range(1, n):
        pivot = diag[..., k] - sub[..., k - 1] * c_prime[..., k - 1]
        _check_pivot(pivot, k)
        if k < n - 1:
            c_prime[..., k] = sup[..., k] / pivot
        d_prime[..., k] = (rhs[..., k] - sub[..., k - 1] * d_prime[..., k - 1]) / pivot

    solution = np.empty_like(d_prime)
    solution[..., n - 1] = d_prime[..., n - 1]
    for k in range(n - 2, -1, -1):
        solution[..., k] = d_prime[..., k] - c_prime[..., k] * solution[..., k + 1]
    return solution


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Forward elimination and back substitution for one system."""
    return thomas_solve_lines(
        system.sub[np.newaxis],
        system.diag[np.newaxis],
        system.sup[np.newaxis],
        system.rhs[np.newaxis],
    )[0]


def _solve_direction(
    rhs: np.ndarray, g: np.ndarray, tau: float, spacing: float, axis: Axis
) -> np.ndarray:
    rhs_lines = _lines(rhs, axis)
    sub, diag, sup = _line_coefficients(_lines(g, axis), tau, spacing)
    solution = thomas_solve_lines(sub, diag, sup, rhs_lines)
    return solution if array_axis(axis) == 1 else solution.T


def aos_diffusion_step(rhs: ImageGrid, g: ImageGrid, tau: float) -> ImageGrid:
    """``½ [(I - 2τ D_x)⁻¹ + (I - 2τ D_y)⁻¹] rhs`` for a frozen diffusivity ``g``."""
    if g.shape != rhs.shape:
        raise GridError(f"Diffusivity shape {g.shape} does not match image {rhs.shape}")
    along_x = _solve_direction(rhs.data, g.data, tau, rhs.spacing, "x")
    along_y = _solve_direction(rhs.data, g.data, tau, rhs.spacing, "y")
    return rhs.with_data(0.5 * (along_x + along_y))


def aos_step(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    config: AosConfig,
    alpha: ImageGrid | None = None,
) -> ImageGrid:
    """One AOS update followed by clamping to the positivity floor.

    ``alpha`` defaults to the indicator of ``f`` (of ``u`` with ``refresh_alpha``).
    """
    require_positive(u.data)
    if alpha is None:
        alpha = gray_level_indicator(u if weights.refresh_alpha else f, weights.indicator)

    h = u.spacing
    kappa = curvature_array(u.data, h)
    area = area_density_array(u.data, h)
    g = diffusivity_array(u.data, alpha.data, weights.b, h, kappa=kappa, area=area)
    source = _source_array(u, f, weights, kappa, area)

    rhs = u.with_data(u.data + config.tau * source)
    diffused = aos_diffusion_step(rhs, u.with_data(g), config.tau)
    return u.with_data(clamp_to_floor(diffused.data, weights.floor))


def aos_run(
    f: ImageGrid,
    weights: ModelWeights,
    config: AosConfig,
    options: RunOptions | None = None,
) -> RunResult:
    """Iterate :func:`aos_step` from ``u⁰ = max(f, floor)``."""
    u, alpha = initial_state(f, weights)
    tracker = RunTracker(f, weights, alpha, options)
    tracker.record(0, u, None)
    log.info("aos_run_started", shape=f.shape, tau=config.tau, max_iters=config.max_iters)

    iterations = 0
    stop_reason = "max-iters"
    for iteration in range(1, config.max_iters + 1):
        u_next = aos_step(u, f, weights, config, alpha=step_alpha(u, weights, alpha))
        tracker.record(iteration, u_next, config.tau)
        iterations = iteration
        converged = config.stop.satisfied(u.data, u_next.data)
        u = u_next
        if converged:
            stop_reason = "converged"
            break

    result = tracker.finish(u, iterations, stop_reason)
    log.info(
        "aos_run_finished",
        iterations=iterations,
        stop_reason=stop_reason,
        best_iteration=result.best_iteration,
    )
    return result


class AosSolver:
    """Registry adapter for the AOS scheme."""

    name = "aos"

    def __init__(self, config: AosConfig | None = None) -> None:
        self.config = config or AosConfig()

    def run(
        self,
        f: ImageGrid,
        weights: ModelWeights,
        options: RunOptions | None = None,
    ) -> RunResult:
        return aos_run(f, weights, self.config, options)
