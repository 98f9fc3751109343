import logging
import os
import sys

from app.core.config import ENV_LOG_LEVEL
from app.core.errors import ConfigError

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class _StderrHandler(logging.StreamHandler):
    pass


def setup_logging(verbose: bool = False) -> None:
    """Diagnostics go to stderr; stdout is reserved for machine output."""
    level = "DEBUG" if verbose else os.getenv(ENV_LOG_LEVEL, "INFO").strip().upper()
    if level not in LEVELS:
        raise ConfigError(f"{ENV_LOG_LEVEL}={level!r} is not one of {', '.join(LEVELS)}")
    root = logging.getLogger()
    for handler in [h for h in root.handlers if isinstance(h, _StderrHandler)]:
        root.removeHandler(handler)
    handler = _StderrHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%H:%M:%S"))
    root.addHandler(handler)
    root.setLevel(level)
