"""Logging helpers."""

import logging
import os
import sys
from pathlib import Path
from typing import Optional, Union

LOG_ENV_VAR = "SEVENSINS_LOG"
DEFAULT_LEVEL = logging.WARNING


def resolve_level(verbose: bool = False, quiet: bool = False) -> int:
    """Pick the log level from CLI flags, then ``SEVENSINS_LOG``, then WARNING.

    Args:
        verbose: ``--verbose`` was given
        quiet: ``--quiet`` was given

    Returns:
        Numeric logging level
    """
    if verbose:
        return logging.DEBUG
    if quiet:
        return logging.ERROR
    name = os.environ.get(LOG_ENV_VAR, "").strip()
    if name:
        level = logging.getLevelName(name.upper())
        if isinstance(level, int):
            return level
    return DEFAULT_LEVEL


def setup_logging(
    level: Union[int, str] = DEFAULT_LEVEL,
    log_file: Optional[str] = None,
    log_format: Optional[str] = None,
    date_format: Optional[str] = None,
) -> None:
    """Set up logging configuration.

    Console output goes to stderr so that stdout carries only the report.

    Args:
        level: Logging level (e.g., logging.INFO, logging.DEBUG)
        log_file: Optional path to log file
        log_format: Optional log format string
        date_format: Optional date format string
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper(), DEFAULT_LEVEL)

    if log_format is None:
        log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    if date_format is None:
        date_format = "%Y-%m-%d %H:%M:%S"

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Remove existing handlers to avoid duplicate logs
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(log_format, date_format)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)
