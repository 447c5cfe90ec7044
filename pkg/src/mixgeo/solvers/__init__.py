"""Solver registry."""

from .aos import AosConfig, AosSolver
from .base import RunLog, RunLogRow, RunOptions, RunResult, Solver, StoppingRule
from .explicit import ExplicitConfig, ExplicitSolver
from .sav import SavConfig, SavSolver

__all__ = [
    "AosConfig",
    "AosSolver",
    "ExplicitConfig",
    "ExplicitSolver",
    "RunLog",
    "RunLogRow",
    "RunOptions",
    "RunResult",
    "SOLVER_NAMES",
    "SavConfig",
    "SavSolver",
    "Solver",
    "StoppingRule",
    "UnknownSolverError",
    "get_solver",
]

SolverSettings = AosConfig | SavConfig | ExplicitConfig

# Registered solvers in the order they are listed to users
SOLVER_NAMES: tuple[str, ...] = ("explicit", "aos", "sav1", "sav2")


class UnknownSolverError(ValueError):
    """Raised for a solver name that is not registered."""

    def __init__(self, name: str) -> None:
        super().__init__(f"Unknown solver {name!r}; valid solvers: {', '.join(SOLVER_NAMES)}")
        self.name = name


def get_solver(name: str, config: SolverSettings | None = None) -> Solver:
    """Build the solver registered under ``name``.

    Args:
        name: One of :data:`SOLVER_NAMES`.
        config: Settings of the matching type; defaults when omitted.

    Raises:
        UnknownSolverError: If ``name`` is not registered.
        TypeError: If ``config`` does not belong to that solver.
    """
    if name == "explicit":
        _check_settings(name, config, ExplicitConfig)
        return ExplicitSolver(config)
    if name == "aos":
        _check_settings(name, config, AosConfig)
        return AosSolver(config)
    if name in ("sav1", "sav2"):
        _check_settings(name, config, SavConfig)
        order = "first" if name == "sav1" else "second"
        if config is None:
            config = SavConfig(order=order)
        elif config.order != order:
            raise TypeError(f"Solver {name!r} needs a {order}-order SavConfig")
        return SavSolver(config)
    raise UnknownSolverError(name)


def _check_settings(name: str, config, expected: type) -> None:
    if config is not None and not isinstance(config, expected):
        raise TypeError(
            f"Solver {name!r} takes {expected.__name__}, got {type(config).__name__}"
        )
