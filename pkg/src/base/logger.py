import logging
import sys
from typing import Optional

from src.base.config import Config, ConfigInvalidValueError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"
_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


def log_level(config: Config) -> str:
    level = config.get_config("LOG_LEVEL", "INFO").upper()
    if level not in _LEVELS:
        raise ConfigInvalidValueError(f"value of LOG_LEVEL is not a valid level: '{level}'")
    return level


def configure_logging(config: Config, level: Optional[str] = None) -> str:
    """
    Configure the root logger once per process. Messages are snake_case events
    followed by key=value pairs, e.g. ``round_completed round=3 absorbed=10``.
    Returns the effective level so uvicorn can be started with the same one.
    """
    level = (level or log_level(config)).upper()
    if level not in _LEVELS:
        raise ConfigInvalidValueError(f"log level is not valid: '{level}'")
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)
    return level
