"""Logging configuration.

Console output is human readable; the file handler writes JSON lines. Every record
carries the active run's command, configuration hash and seed once `bind_run` has
been called, so log lines can be matched to the result files they belong to.
"""

import logging
import sys
from pathlib import Path
from typing import Dict, Optional

from pythonjsonlogger import jsonlogger

from sparcs.core.config import get_settings

RUN_FIELDS = ("command", "config_hash", "seed")

_run_context: Dict[str, object] = {field: None for field in RUN_FIELDS}


class RunContextFilter(logging.Filter):
    """Stamp the bound run context onto each record."""

    def filter(self, record: logging.LogRecord) -> bool:
        for field, value in _run_context.items():
            if not hasattr(record, field):
                setattr(record, field, value)
        return True


def bind_run(command: Optional[str] = None, config_hash: Optional[str] = None, seed: Optional[int] = None) -> None:
    _run_context.update(command=command, config_hash=config_hash, seed=seed)


def clear_run() -> None:
    bind_run()


def run_context() -> Dict[str, object]:
    return dict(_run_context)


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """Configure the root logger; repeated calls replace the previous handlers."""
    settings = get_settings()
    level = getattr(logging, (level or settings.LOG_LEVEL).upper())
    log_file = Path(log_file or settings.LOG_FILE)
    log_file.parent.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger()
    logger.setLevel(min(level, logging.DEBUG))
    logger.handlers = []
    context = RunContextFilter()

    # stderr keeps stdout free for command results
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.addFilter(context)
    console_handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))
    logger.addHandler(console_handler)

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(logging.DEBUG)
    file_handler.addFilter(context)
    file_handler.setFormatter(jsonlogger.JsonFormatter(
        '%(asctime)s %(name)s %(levelname)s %(command)s %(config_hash)s %(seed)s %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))
    logger.addHandler(file_handler)

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the specified name."""
    return logging.getLogger(name)
