"""Forward-Euler gradient flow ``u' = u - τ E'(u)``.

Only stable for small steps; kept as the reference the implicit schemes are
cross-checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import structlog

from ..energy import ModelWeights, clamp_to_floor, euler_lagrange
from ..grid import ImageGrid
from .base import RunOptions, RunResult, RunTracker, StoppingRule, initial_state, step_alpha

log = structlog.get_logger()


@dataclass(frozen=True)
class ExplicitConfig:
    tau: float = 0.05
    max_iters: int = 200
    stop: StoppingRule = field(default_factory=StoppingRule.max_iters)

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"Explicit step size tau must be > 0, got {self.tau}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")


def explicit_step(
    u: ImageGrid,
    f: ImageGrid,
    weights: ModelWeights,
    config: ExplicitConfig,
    alpha: ImageGrid | None = None,
) -> ImageGrid:
    """``max(u - τ E'(u), floor)``."""
    gradient = euler_lagrange(u, f, weights, alpha)
    return u.with_data(clamp_to_floor(u.data - config.tau * gradient.data, weights.floor))


def explicit_run(
    f: ImageGrid,
    weights: ModelWeights,
    config: ExplicitConfig,
    options: RunOptions | None = None,
) -> RunResult:
    u, alpha = initial_state(f, weights)
    tracker = RunTracker(f, weights, alpha, options)
    tracker.record(0, u, None)
    log.info("explicit_run_started", shape=f.shape, tau=config.tau, max_iters=config.max_iters)

    iterations = 0
    stop_reason = "max-iters"
    for iteration in range(1, config.max_iters + 1):
        u_next = explicit_step(u, f, weights, config, step_alpha(u, weights, alpha))
        tracker.record(iteration, u_next, config.tau)
        iterations = iteration
        converged = config.stop.satisfied(u.data, u_next.data)
        u = u_next
        if converged:
            stop_reason = "converged"
            break

    result = tracker.finish(u, iterations, stop_reason)
    log.info("explicit_run_finished", iterations=iterations, stop_reason=stop_reason)
    return result


class ExplicitSolver:
    """Registry adapter for the forward-Euler flow."""

    name = "explicit"

    def __init__(self, config: ExplicitConfig | None = None) -> None:
        self.config = config or ExplicitConfig()

    def run(
        self,
        f: ImageGrid,
        weights: ModelWeights,
        options: RunOptions | None = None,
    ) -> RunResult:
        return explicit_run(f, weights, self.config, options)
