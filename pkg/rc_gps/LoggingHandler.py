import logging
import os
from typing import Optional, Union

import tqdm

LOG_LEVEL_ENV = "RC_GPS_LOG_LEVEL"


class LoggingHandler(logging.Handler):
    """Writes records through ``tqdm.write`` so they do not break running progress bars."""

    def __init__(self, level=logging.NOTSET):
        super().__init__(level)

    def emit(self, record):
        try:
            msg = self.format(record)
            tqdm.tqdm.write(msg)
            self.flush()
        except (KeyboardInterrupt, SystemExit):
            raise
        except Exception:
            self.handleError(record)


def resolve_log_level(level: Optional[Union[int, str]] = None) -> int:
    """The given level, else the ``RC_GPS_LOG_LEVEL`` environment variable, else INFO."""
    if level is None:
        level = os.environ.get(LOG_LEVEL_ENV, "INFO")
    if isinstance(level, str):
        name = level.strip().upper()
        if name.isdigit():
            return int(name)
        value = logging.getLevelName(name)
        if not isinstance(value, int):
            raise ValueError(f"Unknown log level {level!r}")
        return value
    return int(level)


def install_logger(level: Optional[Union[int, str]] = None, fmt: str = "%(asctime)s - %(levelname)s - %(message)s"):
    """Routes the root logger through :class:`LoggingHandler` at the resolved level."""
    logging.basicConfig(
        format=fmt,
        datefmt="%Y-%m-%d %H:%M:%S",
        level=resolve_log_level(level),
        handlers=[LoggingHandler()],
        force=True,
    )
