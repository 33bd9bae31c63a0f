"""Utility helpers for backend workflows.

This module provides the structured logging used by every command. Lines go
through the ``seqattr`` logger so tests can capture them and ``--quiet`` can
silence them.

Typical usage:
    ```python
    from utils import log_message

    log_message("train", "epoch 3 joint=1.25 lr=7.29e-04")
    ```
"""
from __future__ import annotations

import logging
import sys
from datetime import datetime, timezone

LOGGER_NAME = "seqattr"

_logger = logging.getLogger(LOGGER_NAME)


def _ensure_handler() -> None:
    if not _logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        _logger.addHandler(handler)
        _logger.setLevel(logging.INFO)
        _logger.propagate = True


def set_quiet(quiet: bool) -> None:
    """Drop informational lines (errors still reach stderr)."""
    _ensure_handler()
    _logger.setLevel(logging.WARNING if quiet else logging.INFO)


def log_message(scope: str, message: str, level: int = logging.INFO) -> None:
    """Emit structured log messages to stderr.

    Args:
        scope: The logging scope/category (e.g., "cli", "data", "train", "eval",
               "ablate", "checkpoint").
        message: The log message content to output.
        level: Standard ``logging`` level; INFO by default.

    Output Format:
        [scope] [timestamp] message

        Example output:
        [train] [2024-12-04T02:30:45.123456Z] epoch 1 joint=3.2041
    """
    _ensure_handler()
    timestamp = datetime.now(timezone.utc).replace(tzinfo=None).isoformat() + "Z"
    _logger.log(level, f"[{scope}] [{timestamp}] {message}")
    for handler in _logger.handlers:
        handler.flush()
