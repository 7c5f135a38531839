"""
Logging for the Green's function toolkit

Top-level components (orchestrator, loaders, CLI) get a configured logger from
setup_logging("<component>"); library modules use logging.getLogger(__name__).
With GREEN_LOG_TO_FILE=true every component also logs to logs/<component>_<yyyymmdd>.log.
"""

import logging
import logging.handlers
import os
import sys
from datetime import datetime
from typing import Optional

# Add project root to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))
from config.settings import settings

MAX_LOG_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5


def _level(log_level: Optional[str]) -> int:
    name = (log_level or settings.log_level).upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        raise ValueError(f"Unknown log level: {name}")
    return level


def attach_file_handler(logger: logging.Logger, log_file: str, level: int) -> logging.Handler:
    """Rotating file handler with the settings format"""
    log_dir = os.path.dirname(log_file)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(log_file, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS,
                                                   encoding='utf-8')
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(settings.log_format))
    logger.addHandler(handler)
    return handler


def setup_logging(name: str = "green_precond", log_file: Optional[str] = None,
                  log_level: Optional[str] = None) -> logging.Logger:
    """
    Configure a component logger once

    Args:
        name: Component name
        log_file: Explicit log file (default: the dated component file when file logging is on)
        log_level: Level name (default: settings.log_level)

    Returns:
        Configured logger
    """
    level = _level(log_level)
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if logger.handlers:
        return logger

    console = logging.StreamHandler()
    console.setLevel(level)
    console.setFormatter(logging.Formatter(settings.log_format))
    logger.addHandler(console)

    if log_file is None and settings.log_to_file:
        log_file = get_log_file_path(name)
    if log_file:
        attach_file_handler(logger, log_file, level)

    return logger


def get_log_file_path(component: str, date: Optional[datetime] = None) -> str:
    """
    Dated log file of a component, next to settings.log_file_path

    Args:
        component: Component name (e.g. 'experiment_orchestrator')
        date: Date of the file (default today)

    Returns:
        Path logs/<component>_<yyyymmdd>.log
    """
    date = date or datetime.now()
    log_dir = os.path.dirname(settings.log_file_path) or 'logs'
    return os.path.join(log_dir, f"{component}_{date.strftime('%Y%m%d')}.log")
