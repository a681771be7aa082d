from __future__ import annotations

import logging
import sys
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Optional

from clinical_ner.config.models import LoggingSettings

LOG_FORMAT = "[%(asctime)s][%(levelname)s][%(name)s] %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def resolve_level(name: str) -> int:
    level = logging.getLevelNamesMapping().get(name.strip().upper())
    if level is None:
        raise ValueError(f"Invalid logging level: {name}")
    return level


def _rotating_file_handler(path: Path, backup_count: int) -> TimedRotatingFileHandler:
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = TimedRotatingFileHandler(
        filename=str(path),
        when="midnight",
        interval=1,
        backupCount=backup_count,
        encoding="utf-8",
    )
    handler.suffix = "%Y-%m-%d"
    return handler


def init_logging(settings: LoggingSettings, level_override: Optional[str] = None) -> int:
    """
    Configure the root logger for one CLI command and return the effective level.

    Console records go to stderr so that stdout carries only command output (tag
    results, reports, sweep tables). Python warnings, including numpy floating-point
    RuntimeWarnings, are routed into the `py.warnings` logger.
    """
    level = resolve_level(level_override or settings.level)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    file_error: Optional[OSError] = None
    file_path = settings.file.path.strip()
    if file_path:
        try:
            handlers.append(_rotating_file_handler(Path(file_path), settings.file.rotation.backup_count))
        except OSError as e:
            file_error = e

    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)
    logging.captureWarnings(True)

    if file_error is not None:
        root_logger.error("File logging handler failed to initialize. path=%s error=%s", file_path, file_error)
    return level


__all__ = ["init_logging", "resolve_level"]
