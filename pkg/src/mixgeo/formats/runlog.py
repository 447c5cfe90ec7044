"""CSV run logs and sweep summaries (header row, '.' decimals, LF line endings)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

from ..solvers.base import RUNLOG_COLUMNS, RunLog, RunLogRow
from . import write_bytes_atomic

SWEEP_COLUMNS: tuple[str, ...] = ("value", "best_psnr", "best_iter", "wall_s")


@dataclass(frozen=True)
class SweepRow:
    """Summary of one sweep value; ``None`` cells are written empty."""

    value: float
    best_psnr: float | None
    best_iter: int | None
    wall_s: float | None


def format_cell(value) -> str:
    """Shortest round-tripping text for a number; empty for ``None``."""
    if value is None:
        return ""
    if isinstance(value, bool):
        raise TypeError("Boolean values have no CSV cell representation")
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def _parse_cell(text: str, integer: bool = False):
    if text == "":
        return None
    if integer:
        return int(text)
    return float(text)


def _to_csv(header: tuple[str, ...], rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def format_runlog(run_log: RunLog) -> str:
    return _to_csv(RUNLOG_COLUMNS, (row.values() for row in run_log))


def write_runlog(run_log: RunLog, path: Path) -> None:
    write_bytes_atomic(Path(path), format_runlog(run_log).encode("utf-8"))


def parse_runlog(text: str) -> RunLog:
    """Parse CSV produced by :func:`format_runlog`."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != RUNLOG_COLUMNS:
        raise ValueError(f"Run log header must be {','.join(RUNLOG_COLUMNS)}")
    run_log = RunLog()
    for line_number, cells in enumerate(reader, start=2):
        if len(cells) != len(RUNLOG_COLUMNS):
            raise ValueError(f"Run log line {line_number} has {len(cells)} cells")
        values = {
            column: _parse_cell(cell, integer=column == "iter")
            for column, cell in zip(RUNLOG_COLUMNS, cells, strict=True)
        }
        run_log.append(RunLogRow(**values))
    return run_log


def read_runlog(path: Path) -> RunLog:
    return parse_runlog(Path(path).read_text(encoding="utf-8"))


def format_sweep_summary(rows: list[SweepRow]) -> str:
    return _to_csv(
        SWEEP_COLUMNS,
        ((row.value, row.best_psnr, row.best_iter, row.wall_s) for row in rows),
    )


def write_sweep_summary(rows: list[SweepRow], path: Path) -> None:
    write_bytes_atomic(Path(path), format_sweep_summary(rows).encode("utf-8"))
