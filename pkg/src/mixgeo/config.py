"""Configuration management.

Two layers: :class:`Config` reads process-wide settings from the environment,
and :class:`SolverConfig` holds validated experiment settings assembled from a
``key=value`` file and command-line flags.
"""

from __future__ import annotations

import math
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass, fields
from pathlib import Path

import structlog

from .energy import MODEL_PRESETS, POSITIVITY_FLOOR, IndicatorSpec, ModelWeights, model_preset
from .solvers import SOLVER_NAMES, AosConfig, ExplicitConfig, SavConfig, Solver, get_solver
from .solvers.base import (
    DEFAULT_ABSOLUTE_TOLERANCE,
    DEFAULT_RELATIVE_TOLERANCE,
    STOP_MODES,
    StoppingRule,
)

log = structlog.get_logger()

# Global singleton instance
_config_instance: "Config | None" = None

_TRUE_WORDS = ("true", "1", "yes", "on")
_FALSE_WORDS = ("false", "0", "no", "off")


class Config:
    """Process-wide configuration."""

    def __init__(self) -> None:
        """Initialize configuration with defaults and env overrides."""
        # Parent directory for sweep outputs
        self._output_dir = Path(os.environ.get("MIXGEO_OUTPUT_DIR", "mixgeo-runs"))

        # Log level
        self._log_level = os.environ.get("MIXGEO_LOG_LEVEL", "INFO")

        # JSON logging
        json_logging_env = os.environ.get("MIXGEO_JSON_LOGGING", "false")
        self._json_logging = json_logging_env.lower() in ("true", "1", "yes")

        # Parallel sweep workers, validated on first use
        self._jobs_env = os.environ.get("MIXGEO_JOBS", "1")

    @property
    def output_dir(self) -> Path:
        """Default parent directory for sweep outputs."""
        return self._output_dir

    @property
    def log_level(self) -> str:
        """Logging level."""
        return self._log_level

    @property
    def json_logging(self) -> bool:
        """Whether to use JSON logging format."""
        return self._json_logging

    @property
    def jobs(self) -> int:
        """Default number of sweep values run in parallel.

        A value that is not a positive integer falls back to 1 with a warning.
        """
        try:
            jobs = int(self._jobs_env)
        except ValueError:
            jobs = 0
        if jobs < 1:
            log.warning("invalid_jobs_env", value=self._jobs_env, fallback=1)
            return 1
        return jobs


def get_config() -> Config:
    """Get the global configuration instance.

    Returns:
        The singleton Config instance.
    """
    global _config_instance
    if _config_instance is None:
        _config_instance = Config()
    return _config_instance


class ConfigValidationError(ValueError):
    """Raised when experiment settings are invalid; lists every bad field."""

    def __init__(self, errors: list[str]) -> None:
        self.errors = list(errors)
        super().__init__("Invalid configuration:\n  " + "\n  ".join(self.errors))


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines.

    Blank lines and lines starting with ``#`` are skipped; keys are normalized
    so ``tau-min`` and ``tau_min`` are the same setting.

    Raises:
        ConfigValidationError: Listing every malformed line by number.
    """
    values: dict[str, str] = {}
    errors: list[str] = []
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            errors.append(f"line {number}: expected 'key = value', got {raw_line.strip()!r}")
            continue
        values[normalize_key(key)] = value.strip()
    if errors:
        raise ConfigValidationError(errors)
    return values


def load_config_file(path: Path) -> dict[str, str]:
    """Read and parse a ``key=value`` experiment file."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in _TRUE_WORDS:
        return True
    if lowered in _FALSE_WORDS:
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _parse_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"expected a number, got {value!r}") from None
    if not math.isfinite(number):
        raise ValueError(f"expected a finite number, got {value!r}")
    return number


def _parse_int(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"expected an integer, got {value!r}") from None


def _parse_str(value: str) -> str:
    return value.strip()


@dataclass(frozen=True)
class SolverConfig:
    """Flat, validated experiment settings.

    ``None`` means "use the solver's or model preset's default": ``tau`` is 2
    for ``aos`` and 0.05 for ``explicit``; ``stop`` is ``max-iters`` for
    ``aos``/``explicit`` and ``relative`` for the SAV solvers; ``b``, ``eta`` and
    the indicator come from ``model``.
    """

    solver: str = "aos"
    model: str = "mixed"
    b: float | None = None
    eta: float | None = None
    gamma: float = 1.0
    C: float = 1e7
    tau: float | None = None
    tau0: float = 1.0
    tau_min: float = 0.8
    tau_max: float = 1.2
    rho: float = 0.9
    tol_step: float = 1e-3
    max_iters: int = 200
    stop: str | None = None
    stop_tol: float | None = None
    indicator: str | None = None
    alpha: float | None = None
    sigma: float = 2.0
    p: float = 1.0
    refresh_alpha: bool = False
    floor: float = POSITIVITY_FLOOR

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> SolverConfig:
        """Coerce and validate settings from strings or already-typed values.

        Raises:
            ConfigValidationError: Listing every unknown key and bad value.
        """
        errors: list[str] = []
        values: dict[str, object] = {}
        for raw_key, raw_value in mapping.items():
            key = normalize_key(str(raw_key))
            parser = _PARSERS.get(key)
            if parser is None:
                errors.append(f"{key}: unknown setting")
                continue
            if raw_value is None:
                continue
            try:
                values[key] = parser(raw_value) if isinstance(raw_value, str) else raw_value
            except ValueError as e:
                errors.append(f"{key}: {e}")

        config = cls(**values)
        errors.extend(config.problems())
        if errors:
            raise ConfigValidationError(errors)
        return config

    def problems(self) -> list[str]:
        """Every range or cross-field violation, one message each."""
        errors: list[str] = []

        def check(ok: bool, message: str) -> None:
            if not ok:
                errors.append(message)

        check(
            self.solver in SOLVER_NAMES,
            f"solver: unknown solver {self.solver!r}; valid solvers: {', '.join(SOLVER_NAMES)}",
        )
        check(
            self.model in MODEL_PRESETS,
            f"model: unknown model {self.model!r}; valid models: {', '.join(MODEL_PRESETS)}",
        )
        check(self.b is None or self.b >= 0, f"b: must be >= 0, got {self.b}")
        check(self.eta is None or self.eta > 0, f"eta: must be > 0, got {self.eta}")
        check(self.gamma >= 0, f"gamma: must be >= 0, got {self.gamma}")
        check(self.C > 0, f"C: must be > 0, got {self.C}")
        check(self.tau is None or self.tau > 0, f"tau: must be > 0, got {self.tau}")
        check(self.tau0 > 0, f"tau0: must be > 0, got {self.tau0}")
        check(self.tau_min > 0, f"tau_min: must be > 0, got {self.tau_min}")
        check(
            self.tau_min <= self.tau_max,
            f"tau_max: must be >= tau_min ({self.tau_min}), got {self.tau_max}",
        )
        check(0 < self.rho <= 1, f"rho: must lie in (0, 1], got {self.rho}")
        check(self.tol_step > 0, f"tol_step: must be > 0, got {self.tol_step}")
        check(self.max_iters >= 0, f"max_iters: must be >= 0, got {self.max_iters}")
        check(
            self.stop is None or self.stop in STOP_MODES,
            f"stop: unknown stop mode {self.stop!r}; valid modes: {', '.join(STOP_MODES)}",
        )
        check(
            self.stop_tol is None or self.stop_tol > 0,
            f"stop_tol: must be > 0, got {self.stop_tol}",
        )
        check(
            self.indicator is None or self.indicator in ("adaptive", "constant"),
            f"indicator: must be 'adaptive' or 'constant', got {self.indicator!r}",
        )
        check(
            self.alpha is None or 0 < self.alpha <= 1,
            f"alpha: must lie in (0, 1], got {self.alpha}",
        )
        check(self.sigma > 0, f"sigma: must be > 0, got {self.sigma}")
        check(self.p > 0, f"p: must be > 0, got {self.p}")
        check(self.floor > 0, f"floor: must be > 0, got {self.floor}")
        return errors

    def weights(self) -> ModelWeights:
        """Model preset with the explicitly set weights applied on top."""
        preset = model_preset(self.model)
        mode = self.indicator or preset.indicator.mode
        if mode == "constant":
            value = self.alpha
            if value is None:
                value = preset.indicator.value if preset.indicator.mode == "constant" else 1.0
            indicator = IndicatorSpec.constant(value)
        else:
            indicator = IndicatorSpec(sigma=self.sigma, p=self.p)
        return ModelWeights(
            b=preset.b if self.b is None else self.b,
            eta=preset.eta if self.eta is None else self.eta,
            indicator=indicator,
            refresh_alpha=self.refresh_alpha,
            floor=self.floor,
        )

    def stopping_rule(self) -> StoppingRule:
        mode = self.stop
        if mode is None:
            mode = "relative" if self.solver in ("sav1", "sav2") else "max-iters"
        if mode == "max-iters":
            return StoppingRule.max_iters()
        if mode == "relative":
            return StoppingRule.relative(self.stop_tol or DEFAULT_RELATIVE_TOLERANCE)
        return StoppingRule.absolute(self.stop_tol or DEFAULT_ABSOLUTE_TOLERANCE)

    def aos_config(self) -> AosConfig:
        tau = 2.0 if self.tau is None else self.tau
        return AosConfig(tau=tau, max_iters=self.max_iters, stop=self.stopping_rule())

    def explicit_config(self) -> ExplicitConfig:
        tau = 0.05 if self.tau is None else self.tau
        return ExplicitConfig(tau=tau, max_iters=self.max_iters, stop=self.stopping_rule())

    def sav_config(self) -> SavConfig:
        return SavConfig(
            order="second" if self.solver == "sav2" else "first",
            gamma=self.gamma,
            C=self.C,
            tau0=self.tau0,
            tau_min=self.tau_min,
            tau_max=self.tau_max,
            rho=self.rho,
            tol_step=self.tol_step,
            max_iters=self.max_iters,
            stop=self.stopping_rule(),
        )

    def build_solver(self) -> Solver:
        """Solver named by ``solver`` with its settings."""
        if self.solver == "aos":
            return get_solver("aos", self.aos_config())
        if self.solver == "explicit":
            return get_solver("explicit", self.explicit_config())
        return get_solver(self.solver, self.sav_config())

    def as_mapping(self) -> dict[str, object]:
        """Settings that differ from ``None``, keyed by field name."""
        return {
            item.name: getattr(self, item.name)
            for item in fields(self)
            if getattr(self, item.name) is not None
        }


_PARSERS: dict[str, Callable[[str], object]] = {
    "solver": _parse_str,
    "model": _parse_str,
    "b": _parse_float,
    "eta": _parse_float,
    "gamma": _parse_float,
    "C": _parse_float,
    "tau": _parse_float,
    "tau0": _parse_float,
    "tau_min": _parse_float,
    "tau_max": _parse_float,
    "rho": _parse_float,
    "tol_step": _parse_float,
    "max_iters": _parse_int,
    "stop": _parse_str,
    "stop_tol": _parse_float,
    "indicator": _parse_str,
    "alpha": _parse_float,
    "sigma": _parse_float,
    "p": _parse_float,
    "refresh_alpha": _parse_bool,
    "floor": _parse_float,
}
