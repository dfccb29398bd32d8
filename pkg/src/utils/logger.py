"""
Logging for the Evidence Network toolkit

Every module logs through ``get_logger(__name__)``. Loggers share one
format, one stdout handler and an optional rotating file; the CLI can
retune all of them at once with ``set_log_level``.
"""

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

_configured: Dict[str, logging.Logger] = {}


def _parse_level(level: str) -> int:
    name = str(level).strip().upper()
    if name not in LEVELS:
        raise ValueError(f"Unknown log level '{level}'; expected one of {', '.join(LEVELS)}")
    return getattr(logging, name)


def setup_logger(
    name: str,
    log_file: Optional[str] = None,
    level: str = "INFO",
    max_bytes: int = 10485760,  # 10MB
    backup_count: int = 5,
) -> logging.Logger:
    """
    Configure and return a logger instance

    Args:
        name: Logger name (usually __name__ of calling module)
        log_file: Rotating log file path, None for stdout only
        level: One of DEBUG, INFO, WARNING, ERROR, CRITICAL
        max_bytes: Max size of log file before rotation
        backup_count: Number of rotated files to keep

    Returns:
        Configured logger instance

    Raises:
        ValueError: If level is not a known level name
    """
    numeric_level = _parse_level(level)
    logger = logging.getLogger(name)
    logger.setLevel(numeric_level)
    # records stop here so a root handler installed by a host app does not print twice
    logger.propagate = False

    if name in _configured:
        return logger

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    _configured[name] = logger
    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger configured from the environment

    LOG_LEVEL (default INFO) and LOG_FILE (default logs/evnet.log) are read
    after loading a local .env file. An empty LOG_FILE disables the file
    handler.
    """
    load_dotenv()

    log_level = os.getenv("LOG_LEVEL", "INFO")
    log_file = os.getenv("LOG_FILE", "logs/evnet.log")

    return setup_logger(name, log_file=log_file or None, level=log_level)


def set_log_level(level: str) -> None:
    """Apply one level to every logger created through this module"""
    numeric_level = _parse_level(level)
    for logger in _configured.values():
        logger.setLevel(numeric_level)
