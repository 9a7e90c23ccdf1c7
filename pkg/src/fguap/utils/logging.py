"""Logging setup: stdlib loggers routed into loguru sinks."""

import inspect
import logging
import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger as _loguru

_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan> - <level>{message}</level>"
)


class InterceptHandler(logging.Handler):
    """Forward stdlib ``logging`` records to loguru."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level: Union[str, int] = _loguru.level(record.levelname).name
        except ValueError:
            level = record.levelno

        frame, depth = inspect.currentframe(), 0
        while frame and (depth == 0 or frame.f_code.co_filename == logging.__file__):
            frame = frame.f_back
            depth += 1

        _loguru.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def configure_logging(level: str = "INFO", log_file: Optional[Union[str, Path]] = None) -> None:
    """
    Install loguru sinks and intercept stdlib logging.

    Args:
        level: Minimum level name (DEBUG, INFO, WARNING, ...)
        log_file: Optional path of an additional plain-text sink
    """
    level = level.upper()
    _loguru.remove()
    _loguru.add(sys.stderr, level=level, format=_FORMAT, colorize=None)
    if log_file:
        _loguru.add(str(log_file), level=level, encoding="utf-8")
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)
