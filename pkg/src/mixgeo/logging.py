"""Structured logging configuration.

Logs go to stderr so stdout carries only command results.
"""

import logging
import sys

import orjson
import structlog


def _stderr_bytes_logger(*args) -> structlog.BytesLogger:
    return structlog.BytesLogger(file=sys.stderr.buffer)


def _stderr_print_logger(*args) -> structlog.PrintLogger:
    return structlog.PrintLogger(file=sys.stderr)


def configure_logging(json_output: bool = False, level: str = "INFO") -> None:
    """Configure structlog.

    Args:
        json_output: If True, output JSON logs. If False, use console renderer
            when stderr is a terminal.
        level: Minimum level name, e.g. ``"DEBUG"``.

    Raises:
        ValueError: If ``level`` is not a logging level name.
    """
    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        raise ValueError(f"Unknown log level {level!r}")

    shared_processors: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.CallsiteParameterAdder(
            {
                structlog.processors.CallsiteParameter.FILENAME,
                structlog.processors.CallsiteParameter.FUNC_NAME,
                structlog.processors.CallsiteParameter.LINENO,
            }
        ),
    ]

    if json_output or not sys.stderr.isatty():
        processors = shared_processors + [
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(serializer=orjson.dumps),
        ]
        logger_factory = _stderr_bytes_logger
    else:
        processors = shared_processors + [
            structlog.dev.ConsoleRenderer(),
        ]
        logger_factory = _stderr_print_logger

    # Loggers resolve sys.stderr when created, so no caching: the stream may be
    # swapped between command invocations.
    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=logger_factory,
        cache_logger_on_first_use=False,
    )


def get_logger(name: str | None = None) -> structlog.stdlib.BoundLogger:
    """Get a structlog logger instance.

    Args:
        name: Optional logger name.

    Returns:
        A structlog bound logger.
    """
    return structlog.get_logger(name)
