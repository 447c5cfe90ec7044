"""Shared solver plumbing: stopping rules, run logs and the Solver protocol."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal, Protocol, runtime_checkable

import numpy as np
import structlog

from ..energy import (
    EnergyBreakdown,
    ModelWeights,
    clamp_to_floor,
    gray_level_indicator,
    total_energy,
)
from ..grid import ImageGrid
from ..metrics import SsimMode, quality_report

log = structlog.get_logger()

StopMode = Literal["relative", "absolute", "max-iters"]

STOP_MODES: tuple[str, ...] = ("relative", "absolute", "max-iters")

DEFAULT_RELATIVE_TOLERANCE = 1e-4
DEFAULT_ABSOLUTE_TOLERANCE = 1e-1


class NegativeDataError(ValueError):
    """Raised when the noisy data handed to a solver has negative pixels."""


@dataclass(frozen=True)
class StoppingRule:
    """When a run may end before its iteration budget.

    ``relative`` compares ``‖u_new - u‖₂ / ‖u_new‖₂`` with the tolerance,
    ``absolute`` compares the root-mean-square pixel change (8-bit scale), and
    ``max-iters`` never fires.
    """

    mode: StopMode = "max-iters"
    tolerance: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in STOP_MODES:
            raise ValueError(f"Unknown stop mode {self.mode!r}; expected one of {STOP_MODES}")
        if self.mode != "max-iters" and not self.tolerance > 0:
            raise ValueError(f"Stop tolerance must be > 0 for mode {self.mode!r}")

    @classmethod
    def relative(cls, tolerance: float = DEFAULT_RELATIVE_TOLERANCE) -> StoppingRule:
        return cls("relative", tolerance)

    @classmethod
    def absolute(cls, tolerance: float = DEFAULT_ABSOLUTE_TOLERANCE) -> StoppingRule:
        return cls("absolute", tolerance)

    @classmethod
    def max_iters(cls) -> StoppingRule:
        return cls("max-iters", 0.0)

    def change(self, previous: np.ndarray, current: np.ndarray) -> float:
        """The quantity compared with ``tolerance``."""
        delta = current - previous
        if self.mode == "absolute":
            return float(np.sqrt(np.mean(delta * delta)))
        return relative_change(previous, current)

    def satisfied(self, previous: np.ndarray, current: np.ndarray) -> bool:
        if self.mode == "max-iters":
            return False
        return self.change(previous, current) < self.tolerance


def relative_change(previous: np.ndarray, current: np.ndarray) -> float:
    """``‖current - previous‖₂ / ‖current‖₂`` (0 when both vanish)."""
    norm = float(np.linalg.norm(current))
    delta = float(np.linalg.norm(current - previous))
    if norm == 0:
        return 0.0 if delta == 0 else math.inf
    return delta / norm


RUNLOG_COLUMNS: tuple[str, ...] = (
    "iter",
    "tau",
    "energy_total",
    "energy_regularizer",
    "energy_fidelity",
    "r",
    "psnr_db",
    "ssim",
    "wall_ms",
    "modified_energy",
)


@dataclass(frozen=True)
class RunLogRow:
    """One iteration of a run; ``None`` marks a missing value."""

    iter: int
    tau: float | None
    energy_total: float
    energy_regularizer: float
    energy_fidelity: float
    r: float | None = None
    psnr_db: float | None = None
    ssim: float | None = None
    wall_ms: float | None = None
    modified_energy: float | None = None

    def values(self) -> tuple:
        """Cell values in :data:`RUNLOG_COLUMNS` order."""
        return tuple(getattr(self, column) for column in RUNLOG_COLUMNS)


@dataclass
class RunLog:
    """Per-iteration record of a solver run, ordered by ``iter``."""

    rows: list[RunLogRow] = field(default_factory=list)

    def append(self, row: RunLogRow) -> None:
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError(
                f"Run log iterations must increase; got {row.iter} after {self.rows[-1].iter}"
            )
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, index: int) -> RunLogRow:
        return self.rows[index]

    def column(self, name: str) -> list:
        """All values of one column."""
        if name not in RUNLOG_COLUMNS:
            raise KeyError(f"Unknown run log column {name!r}")
        return [getattr(row, name) for row in self.rows]

    def best(self) -> RunLogRow | None:
        """Row with the highest PSNR, earliest on ties; ``None`` without ground truth."""
        best_row = None
        for row in self.rows:
            if row.psnr_db is None:
                continue
            if best_row is None or row.psnr_db > best_row.psnr_db:
                best_row = row
        return best_row


@dataclass(frozen=True)
class RunResult:
    """Outcome of a solver run.

    ``image`` is the best-PSNR iterate when ground truth was supplied and the
    last iterate otherwise; ``final`` is always the last iterate.
    """

    image: ImageGrid
    final: ImageGrid
    log: RunLog
    iterations: int
    stop_reason: str
    best_iteration: int | None = None


@dataclass(frozen=True)
class RunOptions:
    """Bookkeeping options shared by every solver."""

    truth: ImageGrid | None = None
    timings: bool = True
    ssim_mode: SsimMode = "windowed"


def initial_state(f: ImageGrid, weights: ModelWeights) -> tuple[ImageGrid, ImageGrid]:
    """``u⁰ = max(f, floor)`` and the indicator frozen from ``f``.

    Raises:
        NegativeDataError: If ``f`` has negative pixels.
    """
    if np.any(f.data < 0):
        raise NegativeDataError("Noisy data has negative pixels")
    u0 = f.with_data(clamp_to_floor(f.data, weights.floor))
    alpha = gray_level_indicator(f, weights.indicator)
    return u0, alpha


def step_alpha(u: ImageGrid, weights: ModelWeights, frozen: ImageGrid) -> ImageGrid:
    """Indicator used for one step: frozen, or recomputed when ``refresh_alpha`` is set."""
    if weights.refresh_alpha:
        return gray_level_indicator(u, weights.indicator)
    return frozen


class RunTracker:
    """Logs energies, metrics and timings per iteration and keeps the best iterate."""

    def __init__(
        self,
        f: ImageGrid,
        weights: ModelWeights,
        alpha: ImageGrid,
        options: RunOptions | None = None,
    ) -> None:
        self.f = f
        self.weights = weights
        self.alpha = alpha
        self.options = options or RunOptions()
        self.log = RunLog()
        self._started = time.perf_counter()
        self._best_image: ImageGrid | None = None
        self._best_psnr = -math.inf
        self._best_iteration: int | None = None

    def record(
        self,
        iteration: int,
        u: ImageGrid,
        tau: float | None,
        *,
        energy: EnergyBreakdown | None = None,
        r: float | None = None,
        modified_energy: float | None = None,
    ) -> RunLogRow:
        """Append the row for iterate ``u``."""
        if energy is None:
            energy = total_energy(u, self.f, self.weights, step_alpha(u, self.weights, self.alpha))

        psnr_db = ssim_value = None
        truth = self.options.truth
        if truth is not None:
            report = quality_report(truth, u, self.options.ssim_mode)
            psnr_db, ssim_value = report.psnr_db, report.ssim
            if psnr_db > self._best_psnr:
                self._best_psnr = psnr_db
                self._best_image = u
                self._best_iteration = iteration

        wall_ms = None
        if self.options.timings:
            wall_ms = (time.perf_counter() - self._started) * 1000.0

        row = RunLogRow(
            iter=iteration,
            tau=tau,
            energy_total=energy.total,
            energy_regularizer=energy.regularizer,
            energy_fidelity=energy.fidelity,
            r=r,
            psnr_db=psnr_db,
            ssim=ssim_value,
            wall_ms=wall_ms,
            modified_energy=modified_energy,
        )
        self.log.append(row)
        log.debug(
            "iteration_recorded",
            iteration=iteration,
            tau=tau,
            energy=row.energy_total,
            psnr_db=psnr_db,
        )
        return row

    def finish(self, final: ImageGrid, iterations: int, stop_reason: str) -> RunResult:
        image = self._best_image if self._best_image is not None else final
        return RunResult(
            image=image,
            final=final,
            log=self.log,
            iterations=iterations,
            stop_reason=stop_reason,
            best_iteration=self._best_iteration,
        )


@runtime_checkable
class Solver(Protocol):
    """A denoising scheme for the mixed geometry model.

    Implementations are plain classes holding their configuration; they need
    not inherit from this protocol.
    """

    name: str

    def run(
        self,
        f: ImageGrid,
        weights: ModelWeights,
        options: RunOptions | None = None,
    ) -> RunResult:
        """Denoise ``f`` starting from ``u⁰ = max(f, floor)``.

        Args:
            f: Noisy data, non-negative.
            weights: Model weights.
            options: Ground truth, timing and metric options.

        Returns:
            The run result with its per-iteration log.
        """
        ...
