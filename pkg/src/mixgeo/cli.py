"""Command-line interface."""

from __future__ import annotations

import functools
from pathlib import Path

import click
import structlog

from .config import ConfigValidationError, SolverConfig, get_config, load_config_file
from .energy import MODEL_PRESETS
from .experiment import (
    SWEEP_AXES,
    ExperimentSpec,
    add_noise,
    load_image,
    run_denoise,
    run_sweep,
    save_image,
)
from .formats.runlog import format_sweep_summary
from .logging import configure_logging
from .metrics import quality_report
from .phantoms import PHANTOM_KINDS, make_phantom
from .solvers import SOLVER_NAMES
from .solvers.base import STOP_MODES
from .version import get_version_string

log = structlog.get_logger()

# Errors raised for bad inputs or numerical breakdown; reported without a traceback
_DOMAIN_ERRORS = (ValueError, ArithmeticError, OSError)

_INPUT_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)
_OUTPUT_FILE = click.Path(dir_okay=False, path_type=Path)

# (flag, setting, type, help) for every solver setting exposed as a flag
_SETTING_OPTIONS: list[tuple[str, str, object, str]] = [
    ("--solver", "solver", click.Choice(SOLVER_NAMES), "Solver to run."),
    ("--model", "model", click.Choice(MODEL_PRESETS), "Model preset (default: mixed)."),
    ("--b", "b", float, "Curvature weight b."),
    ("--eta", "eta", float, "Fidelity weight eta."),
    ("--gamma", "gamma", float, "SAV linear-split weight."),
    ("--C", "C", float, "SAV non-negativity shift."),
    ("--tau", "tau", float, "Step size for aos and explicit."),
    ("--tau0", "tau0", float, "Initial SAV step size."),
    ("--tau-min", "tau_min", float, "Smallest adaptive SAV step."),
    ("--tau-max", "tau_max", float, "Largest adaptive SAV step."),
    ("--rho", "rho", float, "Adaptive step safety factor."),
    ("--tol-step", "tol_step", float, "Adaptive step reference tolerance."),
    ("--max-iters", "max_iters", int, "Iteration budget."),
    ("--stop", "stop", click.Choice(STOP_MODES), "Stopping rule."),
    ("--stop-tol", "stop_tol", float, "Stopping rule tolerance."),
    ("--indicator", "indicator", click.Choice(("adaptive", "constant")), "Area weight mode."),
    ("--alpha", "alpha", float, "Constant area weight."),
    ("--sigma", "sigma", float, "Indicator smoothing width."),
    ("--p", "p", float, "Indicator exponent."),
    ("--floor", "floor", float, "Positivity floor."),
]


def solver_options(command):
    """Attach the solver setting flags and ``--config`` to a command."""
    command = click.option(
        "--refresh-alpha/--freeze-alpha",
        "refresh_alpha",
        default=None,
        help="Recompute the indicator from each iterate instead of freezing it.",
    )(command)
    for flag, name, option_type, help_text in reversed(_SETTING_OPTIONS):
        command = click.option(flag, name, type=option_type, default=None, help=help_text)(
            command
        )
    command = click.option(
        "--config",
        "config_path",
        type=_INPUT_FILE,
        default=None,
        help="key=value settings file; flags override it.",
    )(command)
    return command


def _settings_from(config_path: Path | None, flags: dict[str, object]) -> SolverConfig:
    mapping: dict[str, object] = {}
    if config_path is not None:
        mapping.update(load_config_file(config_path))
    mapping.update({key: value for key, value in flags.items() if value is not None})
    return SolverConfig.from_mapping(mapping)


def _pop_settings(kwargs: dict[str, object]) -> dict[str, object]:
    names = [name for _, name, _, _ in _SETTING_OPTIONS] + ["refresh_alpha"]
    return {name: kwargs.pop(name) for name in names}


def handle_errors(command):
    """Turn domain errors into clean CLI failures with a non-zero exit."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigValidationError as e:
            log.warning("config_invalid", errors=e.errors)
            raise click.UsageError(str(e)) from e
        except _DOMAIN_ERRORS as e:
            log.error("command_failed", error=str(e), error_type=type(e).__name__)
            raise click.ClickException(str(e)) from e

    return wrapper


def _parse_values(text: str) -> list[float]:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(float(part))
        except ValueError:
            raise click.BadParameter(f"{part!r} is not a number", param_hint="--values") from None
        if values.count(values[-1]) > 1:
            raise click.BadParameter(f"{part!r} is listed twice", param_hint="--values")
    return values


@click.group()
@click.version_option(version=get_version_string(), prog_name="mixgeo")
@click.option("--log-level", default=None, help="Minimum log level (default: MIXGEO_LOG_LEVEL).")
@click.option(
    "--json-logs/--console-logs",
    default=None,
    help="Log format on stderr (default: MIXGEO_JSON_LOGGING).",
)
def cli(log_level: str | None, json_logs: bool | None) -> None:
    """Mixed geometry denoising of multiplicative gamma noise."""
    config = get_config()
    json_output = config.json_logging if json_logs is None else json_logs
    try:
        configure_logging(json_output=json_output, level=log_level or config.log_level)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--log-level") from e


@cli.command("add-noise")
@click.option("--in", "input_path", type=_INPUT_FILE, required=True, help="Clean PGM.")
@click.option("--out", "output_path", type=_OUTPUT_FILE, required=True, help="Noisy PGM.")
@click.option("--L", "looks", type=float, required=True, help="Number of looks (noise level).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@handle_errors
def add_noise_command(input_path: Path, output_path: Path, looks: float, seed: int) -> None:
    """Apply gamma noise f = u * eta; also writes a real-valued .mgd sidecar."""
    add_noise(input_path, output_path, looks, seed)
    click.echo(f"Wrote {output_path}")


@cli.command("denoise")
@click.option("--in", "input_path", type=_INPUT_FILE, required=True, help="Noisy PGM.")
@click.option("--truth", "truth_path", type=_INPUT_FILE, default=None, help="Clean reference.")
@click.option("--out", "output_path", type=_OUTPUT_FILE, default=None, help="Result PGM.")
@click.option("--log", "log_path", type=_OUTPUT_FILE, default=None, help="Run log CSV.")
@click.option("--no-timings", is_flag=True, help="Leave wall-time cells empty.")
@click.option("--ssim-mode", type=click.Choice(("windowed", "global")), default="windowed")
@solver_options
@handle_errors
def denoise_command(
    input_path: Path,
    truth_path: Path | None,
    output_path: Path | None,
    log_path: Path | None,
    no_timings: bool,
    ssim_mode: str,
    config_path: Path | None,
    **kwargs,
) -> None:
    """Run a solver on a noisy image."""
    settings = _settings_from(config_path, _pop_settings(kwargs))
    outcome = run_denoise(
        ExperimentSpec(
            input_path=input_path,
            settings=settings,
            truth_path=truth_path,
            output_path=output_path,
            log_path=log_path,
            timings=not no_timings,
            ssim_mode=ssim_mode,
        )
    )
    result = outcome.result
    click.echo(f"Solver: {settings.solver}, iterations: {result.iterations} ({result.stop_reason})")
    if outcome.report is not None:
        click.echo(f"Best iteration: {result.best_iteration}")
        click.echo(outcome.report.format())


@cli.command("evaluate")
@click.option("--ref", "reference_path", type=_INPUT_FILE, required=True, help="Reference.")
@click.option("--cand", "candidate_path", type=_INPUT_FILE, required=True, help="Candidate.")
@click.option("--ssim-mode", type=click.Choice(("windowed", "global")), default="windowed")
@handle_errors
def evaluate_command(reference_path: Path, candidate_path: Path, ssim_mode: str) -> None:
    """Print PSNR and SSIM of a candidate against a reference."""
    report = quality_report(load_image(reference_path), load_image(candidate_path), ssim_mode)
    click.echo(report.format())


@cli.command("sweep")
@click.option("--in", "input_path", type=_INPUT_FILE, required=True, help="Noisy PGM.")
@click.option("--truth", "truth_path", type=_INPUT_FILE, default=None, help="Clean reference.")
@click.option("--axis", type=click.Choice(SWEEP_AXES), required=True, help="Swept parameter.")
@click.option("--values", "values_text", default="", help="Comma-separated values, e.g. 1,2,5,10.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--jobs", type=click.IntRange(1), default=None, help="Values run in parallel.")
@click.option("--no-timings", is_flag=True, help="Leave wall-time cells empty.")
@solver_options
@handle_errors
def sweep_command(
    input_path: Path,
    truth_path: Path | None,
    axis: str,
    values_text: str,
    out_dir: Path | None,
    jobs: int | None,
    no_timings: bool,
    config_path: Path | None,
    **kwargs,
) -> None:
    """Denoise once per parameter value and write summary.csv."""
    config = get_config()
    settings = _settings_from(config_path, _pop_settings(kwargs))
    values = _parse_values(values_text)
    out_dir = out_dir or config.output_dir
    rows = run_sweep(
        ExperimentSpec(
            input_path=input_path,
            settings=settings,
            truth_path=truth_path,
            timings=not no_timings,
        ),
        axis,
        values,
        out_dir,
        jobs=jobs or config.jobs,
    )
    click.echo(format_sweep_summary(rows), nl=False)


@cli.command("phantom")
@click.option("--kind", type=click.Choice(PHANTOM_KINDS), required=True)
@click.option("--size", type=click.IntRange(1), default=64, show_default=True)
@click.option("--out", "output_path", type=_OUTPUT_FILE, required=True)
@handle_errors
def phantom_command(kind: str, size: int, output_path: Path) -> None:
    """Write a synthetic test image (PGM plus sidecar)."""
    save_image(make_phantom(kind, size), output_path)
    click.echo(f"Wrote {output_path}")


@cli.command("solvers")
def solvers_command() -> None:
    """List the available solvers."""
    for name in SOLVER_NAMES:
        click.echo(name)


def main() -> None:
    """Run the mixgeo command line."""
    cli()
