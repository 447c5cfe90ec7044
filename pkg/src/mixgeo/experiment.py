"""Experiment orchestration: noise synthesis, denoising runs and parameter sweeps.

Every function reads and validates all of its inputs before computing, and
writes outputs only after the computation has succeeded.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import structlog

from .config import ConfigValidationError, SolverConfig
from .formats.pgm import read_pgm, write_pgm
from .formats.runlog import SweepRow, format_cell, write_runlog, write_sweep_summary
from .formats.sidecar import SUFFIX as SIDECAR_SUFFIX
from .formats.sidecar import read_sidecar, sidecar_path, write_sidecar
from .grid import ImageGrid
from .metrics import MetricShapeError, QualityReport, SsimMode, quality_report
from .noise import GammaNoiseSpec, apply_multiplicative_noise
from .solvers import RunOptions, RunResult

log = structlog.get_logger()

SWEEP_AXES: tuple[str, ...] = ("tau", "b", "eta", "C")


@dataclass(frozen=True)
class ExperimentSpec:
    """One denoising experiment.

    ``timings=False`` leaves the wall-time cells empty so the run log is
    byte-reproducible.
    """

    input_path: Path
    settings: SolverConfig
    truth_path: Path | None = None
    output_path: Path | None = None
    log_path: Path | None = None
    timings: bool = True
    ssim_mode: SsimMode = "windowed"


@dataclass(frozen=True)
class DenoiseOutcome:
    result: RunResult
    report: QualityReport | None
    wall_s: float


def load_image(path: Path) -> ImageGrid:
    """Read an image, preferring the real-valued sidecar next to a PGM.

    Raises:
        FileNotFoundError: If neither the file nor a sidecar exists.
        PgmFormatError: For an unreadable PGM.
        SidecarFormatError: For an unreadable sidecar.
    """
    path = Path(path)
    if path.suffix == SIDECAR_SUFFIX:
        return read_sidecar(path)
    companion = sidecar_path(path)
    if companion.exists():
        log.debug("sidecar_loaded", path=str(companion))
        return read_sidecar(companion)
    return read_pgm(path)


def save_image(img: ImageGrid, path: Path, sidecar: bool = True) -> None:
    """Write the PGM and, unless disabled, its real-valued sidecar.

    A PGM is never left next to a sidecar holding another image: the sidecar
    goes first and is removed if the PGM write fails, and ``sidecar=False``
    drops any existing one.
    """
    path = Path(path)
    companion = sidecar_path(path)
    if not sidecar:
        companion.unlink(missing_ok=True)
        write_pgm(img, path)
        return

    write_sidecar(img, companion)
    try:
        write_pgm(img, path)
    except OSError:
        companion.unlink(missing_ok=True)
        log.warning("sidecar_removed", path=str(companion), reason="pgm_write_failed")
        raise


def add_noise(input_path: Path, output_path: Path, looks: float, seed: int = 0) -> ImageGrid:
    """Degrade a clean image with gamma noise and save it with its sidecar."""
    spec = GammaNoiseSpec(looks=looks, seed=seed)
    clean = load_image(input_path)
    noisy = apply_multiplicative_noise(clean, spec)
    save_image(noisy, output_path)
    log.info("noise_added", input=str(input_path), output=str(output_path), looks=looks, seed=seed)
    return noisy


def _load_inputs(spec: ExperimentSpec) -> tuple[ImageGrid, ImageGrid | None]:
    f = load_image(spec.input_path)
    truth = None
    if spec.truth_path is not None:
        truth = load_image(spec.truth_path)
        if truth.shape != f.shape:
            raise MetricShapeError(
                f"Ground truth shape {truth.shape} does not match input shape {f.shape}"
            )
    return f, truth


def run_denoise(spec: ExperimentSpec) -> DenoiseOutcome:
    """Run the configured solver and write the result image and run log."""
    f, truth = _load_inputs(spec)
    solver = spec.settings.build_solver()
    weights = spec.settings.weights()
    options = RunOptions(truth=truth, timings=spec.timings, ssim_mode=spec.ssim_mode)

    log.info("denoise_started", solver=solver.name, input=str(spec.input_path), shape=f.shape)
    started = time.perf_counter()
    result = solver.run(f, weights, options)
    wall_s = time.perf_counter() - started

    report = quality_report(truth, result.image, spec.ssim_mode) if truth is not None else None

    if spec.output_path is not None:
        save_image(result.image, spec.output_path)
    if spec.log_path is not None:
        write_runlog(result.log, spec.log_path)

    log.info(
        "denoise_finished",
        solver=solver.name,
        iterations=result.iterations,
        best_iteration=result.best_iteration,
        psnr_db=report.psnr_db if report else None,
        ssim=report.ssim if report else None,
    )
    return DenoiseOutcome(result=result, report=report, wall_s=wall_s)


def settings_for(settings: SolverConfig, axis: str, value: float) -> SolverConfig:
    """Copy of ``settings`` with one swept parameter set to ``value``.

    For the SAV solvers a ``tau`` value fixes the step (``tau0 = tau_min =
    tau_max``).

    Raises:
        ValueError: For an unknown axis.
        ConfigValidationError: If the value is out of range.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"Unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    if axis == "tau" and settings.solver in ("sav1", "sav2"):
        updated = replace(settings, tau0=value, tau_min=value, tau_max=value)
    else:
        updated = replace(settings, **{axis: value})
    problems = updated.problems()
    if problems:
        raise ConfigValidationError(problems)
    return updated


def sweep_directory(out_dir: Path, axis: str, value: float) -> Path:
    return Path(out_dir) / f"{axis}-{format_cell(float(value))}"


def run_sweep(
    spec: ExperimentSpec,
    axis: str,
    values: list[float],
    out_dir: Path,
    jobs: int = 1,
) -> list[SweepRow]:
    """Run one denoise per value, each writing into its own directory.

    Summary rows keep the order of ``values`` whatever ``jobs`` is. The summary
    is written to ``out_dir/summary.csv``.
    """
    out_dir = Path(out_dir)
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    directories = [sweep_directory(out_dir, axis, value) for value in values]
    if len(set(directories)) != len(directories):
        repeated = sorted({d.name for d in directories if directories.count(d) > 1})
        raise ValueError(f"Sweep values must be distinct; repeated: {', '.join(repeated)}")
    per_value = [settings_for(spec.settings, axis, value) for value in values]
    _load_inputs(spec)

    def run_one(item: tuple[float, SolverConfig]) -> SweepRow:
        value, settings = item
        directory = sweep_directory(out_dir, axis, value)
        outcome = run_denoise(
            replace(
                spec,
                settings=settings,
                output_path=directory / "denoised.pgm",
                log_path=directory / "run.csv",
            )
        )
        best = outcome.result.log.best()
        return SweepRow(
            value=float(value),
            best_psnr=best.psnr_db if best else None,
            best_iter=best.iter if best else None,
            wall_s=outcome.wall_s if spec.timings else None,
        )

    log.info("sweep_started", axis=axis, values=list(values), jobs=jobs)
    items = list(zip(values, per_value, strict=True))
    if jobs == 1:
        rows = [run_one(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_one, items))

    write_sweep_summary(rows, out_dir / "summary.csv")
    log.info("sweep_finished", axis=axis, runs=len(rows))
    return rows
