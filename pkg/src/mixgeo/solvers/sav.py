"""Scalar auxiliary variable (SAV) schemes with adaptive time stepping.

The energy is split as ``E(u) = (γ/2)(u, Lu) + ε₁[u] - C`` with ``L`` the
Neumann negative Laplacian, and ``r = sqrt(ε₁)`` is evolved alongside ``u``.
Each step costs two solves with the constant operator ``I + cγL``, done in the
cosine basis. Both schemes dissipate the modified energy ``(γ/2)(u, Lu) + r²``
for every step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
import structlog
from scipy.fft import dctn, idctn

from ..energy import ModelWeights, clamp_to_floor, energy_and_gradient
from ..grid import ImageGrid, shift
from .base import (
    RunOptions,
    RunResult,
    RunTracker,
    StoppingRule,
    initial_state,
    relative_change,
    step_alpha,
)

log = structlog.get_logger()

SavOrder = Literal["first", "second"]


class AuxiliaryEnergyError(ValueError):
    """Raised when ``ε₁ = E - (γ/2)(u, Lu) + C`` is not positive."""


@dataclass(frozen=True)
class SavConfig:
    """SAV scheme settings.

    ``tau0`` is clamped into ``[tau_min, tau_max]``; ``tau_min == tau_max`` turns
    adaptivity off.
    """

    order: SavOrder = "first"
    gamma: float = 1.0
    C: float = 1e7
    tau0: float = 1.0
    tau_min: float = 0.8
    tau_max: float = 1.2
    rho: float = 0.9
    tol_step: float = 1e-3
    max_iters: int = 200
    stop: StoppingRule = field(default_factory=StoppingRule.relative)

    def __post_init__(self) -> None:
        if self.order not in ("first", "second"):
            raise ValueError(f"SAV order must be 'first' or 'second', got {self.order!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if not self.tau0 > 0:
            raise ValueError(f"tau0 must be > 0, got {self.tau0}")
        if not 0 < self.tau_min <= self.tau_max:
            raise ValueError(
                f"Need 0 < tau_min <= tau_max, got tau_min={self.tau_min}, tau_max={self.tau_max}"
            )
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if not self.tol_step > 0:
            raise ValueError(f"tol_step must be > 0, got {self.tol_step}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")

    @property
    def initial_tau(self) -> float:
        return min(max(self.tau0, self.tau_min), self.tau_max)


@dataclass(frozen=True)
class SavState:
    """Iterate ``u``, auxiliary ``r`` and the step size ``tau`` for the next step.

    ``u_prev`` is only used by the second-order scheme. ``scalar_reduction``
    holds the ``(b, u)`` value predicted by the two-solve shortcut of the step
    that produced this state.
    """

    u: ImageGrid
    r: float
    tau: float
    iter: int = 0
    u_prev: ImageGrid | None = None
    scalar_reduction: float | None = None


def inner(a: ImageGrid, b: ImageGrid) -> float:
    """Discrete L² product ``Σ a·b ΔxΔy``."""
    return _dot(a.data, b.data, a.cell_area)


def _dot(a: np.ndarray, b: np.ndarray, cell_area: float) -> float:
    # np.sum reduces in a fixed pairwise order.
    return float(np.sum(a * b)) * cell_area


def _laplacian_array(u: np.ndarray, spacing: float) -> np.ndarray:
    total = np.zeros_like(u)
    for axis in (1, 0):
        total = total + (2.0 * u - shift(u, 1, axis) - shift(u, -1, axis))
    return total / (spacing * spacing)


def linear_operator_L(u: ImageGrid) -> ImageGrid:
    """Five-point negative Laplacian ``-Δu`` with replicated (Neumann) borders."""
    return u.with_data(_laplacian_array(u.data, u.spacing))


def laplacian_eigenvalues(shape: tuple[int, int], spacing: float = 1.0) -> np.ndarray:
    """Eigenvalues of ``L`` on the type-II cosine basis, shaped like the image."""
    rows, cols = shape
    lam_y = 2.0 - 2.0 * np.cos(np.pi * np.arange(rows) / rows)
    lam_x = 2.0 - 2.0 * np.cos(np.pi * np.arange(cols) / cols)
    return (lam_y[:, np.newaxis] + lam_x[np.newaxis, :]) / (spacing * spacing)


def _implicit_solve_array(rhs: np.ndarray, coefficient: float, spacing: float) -> np.ndarray:
    if coefficient == 0:
        return rhs.copy()
    spectrum = dctn(rhs, type=2, norm="ortho")
    spectrum /= 1.0 + coefficient * laplacian_eigenvalues(rhs.shape, spacing)
    return idctn(spectrum, type=2, norm="ortho")


def implicit_solve(rhs: ImageGrid, tau: float, gamma: float, half: bool = False) -> ImageGrid:
    """Solve ``(I + cγL) x = rhs`` with ``c = τ`` (or ``τ/2`` when ``half``)."""
    if tau < 0 or gamma < 0:
        raise ValueError(f"tau and gamma must be >= 0, got tau={tau}, gamma={gamma}")
    coefficient = (0.5 * tau if half else tau) * gamma
    return rhs.with_data(_implicit_solve_array(rhs.data, coefficient, rhs.spacing))


def eps1_and_derivative(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    gamma: float,
    C: float,
    alpha: ImageGrid | None = None,
) -> tuple[float, ImageGrid]:
    """``ε₁[u] = E(u) - (γ/2)(u, Lu) + C`` and ``ε₁'(u) = E'(u) - γ Lu``.

    Raises:
        AuxiliaryEnergyError: If ``ε₁ <= 0``.
    """
    energy, gradient = energy_and_gradient(u, f, weights, alpha)
    if gamma == 0:
        eps1 = energy.total + C
        derivative = gradient
    else:
        lu = linear_operator_L(u)
        eps1 = energy.total - 0.5 * gamma * inner(u, lu) + C
        derivative = gradient.with_data(gradient.data - gamma * lu.data)
    if not eps1 > 0:
        raise AuxiliaryEnergyError(
            f"Auxiliary energy eps1 = {eps1:.6g} is not positive; increase C (currently {C:g})"
        )
    return eps1, derivative


def modified_energy(state: SavState, gamma: float) -> float:
    """``(γ/2)(u, Lu) + r²``."""
    quadratic = 0.0
    if gamma != 0:
        quadratic = 0.5 * gamma * inner(state.u, linear_operator_L(state.u))
    return quadratic + state.r * state.r


def sav_step_first(
    state: SavState,
    f: ImageGrid,
    weights: ModelWeights,
    config: SavConfig,
    alpha: ImageGrid | None = None,
) -> SavState:
    """Backward-Euler SAV step.

    Solves ``(u' - u)/τ = -γLu' - r' b`` and ``r' - r = ½(b, u' - u)`` with
    ``b = ε₁'(u)/sqrt(ε₁[u])``, then clamps ``u'`` to the positivity floor.
    """
    u = state.u
    tau = state.tau
    h2 = u.cell_area
    eps1, derivative = eps1_and_derivative(u, f, weights, config.gamma, config.C, alpha)
    b = derivative.data / math.sqrt(eps1)

    c = u.data - tau * state.r * b + (0.5 * tau) * b * _dot(b, u.data, h2)
    coefficient = tau * config.gamma
    x_c = _implicit_solve_array(c, coefficient, u.spacing)
    x_b = _implicit_solve_array(b, coefficient, u.spacing)

    b_dot_u = _dot(b, x_c, h2) / (1.0 + 0.5 * tau * _dot(b, x_b, h2))
    u_new = x_c - (0.5 * tau * b_dot_u) * x_b
    r_new = state.r + 0.5 * _dot(b, u_new - u.data, h2)

    return SavState(
        u=u.with_data(clamp_to_floor(u_new, weights.floor)),
        r=r_new,
        tau=tau,
        iter=state.iter + 1,
        u_prev=u,
        scalar_reduction=b_dot_u,
    )


def sav_step_second(
    state: SavState,
    f: ImageGrid,
    weights: ModelWeights,
    config: SavConfig,
    alpha: ImageGrid | None = None,
) -> SavState:
    """Crank-Nicolson SAV step with the extrapolation ``ũ = (3u - u_prev)/2``.

    Solves ``(u' - u)/τ = -γL(u' + u)/2 - ((r' + r)/2) b`` and
    ``r' - r = ½(b, u' - u)`` with ``b = ε₁'(ũ)/sqrt(ε₁[ũ])``. A state without
    ``u_prev`` starts from ``u_prev = u``.
    """
    u = state.u
    u_prev = state.u_prev if state.u_prev is not None else u
    tau = state.tau
    h2 = u.cell_area

    extrapolated = u.with_data(clamp_to_floor(1.5 * u.data - 0.5 * u_prev.data, weights.floor))
    eps1, derivative = eps1_and_derivative(
        extrapolated, f, weights, config.gamma, config.C, alpha
    )
    b = derivative.data / math.sqrt(eps1)

    c = u.data - tau * state.r * b + (0.25 * tau) * b * _dot(b, u.data, h2)
    if config.gamma != 0:
        c = c - (0.5 * tau * config.gamma) * _laplacian_array(u.data, u.spacing)
    coefficient = 0.5 * tau * config.gamma
    x_c = _implicit_solve_array(c, coefficient, u.spacing)
    x_b = _implicit_solve_array(b, coefficient, u.spacing)

    b_dot_u = _dot(b, x_c, h2) / (1.0 + 0.25 * tau * _dot(b, x_b, h2))
    u_new = x_c - (0.25 * tau * b_dot_u) * x_b
    r_new = state.r + 0.5 * _dot(b, u_new - u.data, h2)

    return SavState(
        u=u.with_data(clamp_to_floor(u_new, weights.floor)),
        r=r_new,
        tau=tau,
        iter=state.iter + 1,
        u_prev=u,
        scalar_reduction=b_dot_u,
    )


def adapt_tau(tau: float, e: float, config: SavConfig) -> float:
    """``max(τ_min, min(ρ (tol/e)^½ τ, τ_max))``; ``τ_max`` when ``e = 0``."""
    if e == 0:
        return config.tau_max
    proposed = config.rho * math.sqrt(config.tol_step / e) * tau
    return max(config.tau_min, min(proposed, config.tau_max))


def sav_run(
    f: ImageGrid,
    weights: ModelWeights,
    config: SavConfig,
    options: RunOptions | None = None,
) -> RunResult:
    """Algorithm loop: step, measure the relative change, adapt ``τ``, test the stop rule.

    Raises:
        AuxiliaryEnergyError: If ``ε₁ <= 0`` at the start or at any step.
    """
    u, alpha = initial_state(f, weights)
    eps1, _ = eps1_and_derivative(u, f, weights, config.gamma, config.C, alpha)
    r0 = math.sqrt(eps1)
    state = SavState(
        u=u,
        r=r0,
        tau=config.initial_tau,
        u_prev=u if config.order == "second" else None,
    )
    step = sav_step_first if config.order == "first" else sav_step_second

    tracker = RunTracker(f, weights, alpha, options)
    tracker.record(0, u, None, r=state.r, modified_energy=modified_energy(state, config.gamma))
    log.info(
        "sav_run_started",
        order=config.order,
        shape=f.shape,
        tau=state.tau,
        gamma=config.gamma,
        C=config.C,
        max_iters=config.max_iters,
    )

    stop_reason = "max-iters"
    for iteration in range(1, config.max_iters + 1):
        new_state = step(state, f, weights, config, step_alpha(state.u, weights, alpha))
        e = relative_change(state.u.data, new_state.u.data)
        tracker.record(
            iteration,
            new_state.u,
            state.tau,
            r=new_state.r,
            modified_energy=modified_energy(new_state, config.gamma),
        )
        converged = config.stop.satisfied(state.u.data, new_state.u.data)
        state = replace(new_state, tau=adapt_tau(state.tau, e, config))
        if converged:
            stop_reason = "converged"
            break

    result = tracker.finish(state.u, state.iter, stop_reason)
    final_eps1, _ = eps1_and_derivative(
        state.u, f, weights, config.gamma, config.C, step_alpha(state.u, weights, alpha)
    )
    log.info(
        "sav_run_finished",
        order=config.order,
        iterations=state.iter,
        stop_reason=stop_reason,
        best_iteration=result.best_iteration,
        r_drift=abs(state.r - math.sqrt(final_eps1)) / r0,
    )
    return result


class SavSolver:
    """Registry adapter for the SAV schemes (``sav1`` and ``sav2``)."""

    def __init__(self, config: SavConfig | None = None) -> None:
        self.config = config or SavConfig()

    @property
    def name(self) -> str:
        return "sav1" if self.config.order == "first" else "sav2"

    def run(
        self,
        f: ImageGrid,
        weights: ModelWeights,
        options: RunOptions | None = None,
    ) -> RunResult:
        return sav_run(f, weights, self.config, options)
