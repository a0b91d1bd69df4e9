# depthfilter/utils/log.py
# Logging setup shared across depthfilter.
# get_logger(name) configures a singleton stderr logger and optional rotating
# file logging when LOG_TO_FILE=true. Output files never receive log lines.

from __future__ import annotations
import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

_DEFAULT_FMT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_DEFAULT_DATEFMT = "%Y-%m-%d %H:%M:%S"

_INITIALIZED = False


def _init_root(level: Optional[str] = None) -> None:
    global _INITIALIZED
    if _INITIALIZED:
        return

    name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    lvl = getattr(logging, name, None)
    if not isinstance(lvl, int):
        lvl = logging.INFO

    root = logging.getLogger("depthfilter")
    root.setLevel(lvl)
    root.propagate = False

    for h in list(root.handlers):
        root.removeHandler(h)

    ch = logging.StreamHandler()
    ch.setLevel(lvl)
    ch.setFormatter(logging.Formatter(_DEFAULT_FMT, datefmt=_DEFAULT_DATEFMT))
    root.addHandler(ch)

    if os.getenv("LOG_TO_FILE", "false").lower() == "true":
        log_dir = Path(os.getenv("LOG_DIR", "logs"))
        log_dir.mkdir(parents=True, exist_ok=True)
        fh = RotatingFileHandler(
            log_dir / "depthfilter.log",
            maxBytes=int(os.getenv("LOG_MAX_BYTES", "1048576")),
            backupCount=int(os.getenv("LOG_BACKUPS", "5")),
        )
        fh.setLevel(lvl)
        fh.setFormatter(logging.Formatter(_DEFAULT_FMT, datefmt=_DEFAULT_DATEFMT))
        root.addHandler(fh)

    _INITIALIZED = True


def set_level(level: str) -> None:
    """Change the level of the package logger and its handlers (used by --log-level)."""
    _init_root()
    lvl = getattr(logging, level.upper(), logging.INFO)
    root = logging.getLogger("depthfilter")
    root.setLevel(lvl)
    for h in root.handlers:
        h.setLevel(lvl)


def get_logger(name: str = "depthfilter") -> logging.Logger:
    """Return a logger under the ``depthfilter`` hierarchy with consistent formatting.

    Usage:
        from ..utils.log import get_logger
        LOG = get_logger(__name__)
    """
    _init_root()
    if name != "depthfilter" and not name.startswith("depthfilter."):
        name = f"depthfilter.{name}"
    return logging.getLogger(name)
