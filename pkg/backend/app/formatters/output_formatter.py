"""JSON envelopes printed by the command line.

Every command ends with exactly one envelope on stdout: ``status`` is
``success`` or ``error``, ``operation`` names the subcommand, and the payload
sits under ``data`` or ``error`` respectively.
"""

from datetime import datetime, timezone
from typing import Any, Dict, Optional


def _envelope(status: str, operation: str) -> Dict[str, Any]:
    stamp = datetime.now(timezone.utc).replace(tzinfo=None).isoformat() + "Z"
    return {"status": status, "operation": operation, "timestamp": stamp}


def format_success(
    operation: str,
    data: Optional[Dict[str, Any]] = None,
    message: str = "Operation successful",
) -> Dict[str, Any]:
    """Envelope for a finished command; ``data`` is omitted when empty."""
    response = _envelope("success", operation)
    response["message"] = message
    if data:
        response["data"] = data
    return response


def format_error(
    operation: str,
    error_message: str,
    error_code: str = "UNKNOWN_ERROR",
    details: Optional[Dict[str, Any]] = None,
    exit_code: Optional[int] = None,
) -> Dict[str, Any]:
    """Envelope for a failed command.

    Args:
        operation: Subcommand that failed (``cli`` before one is known).
        error_message: Human-readable error description.
        error_code: Machine-readable code of the raised error.
        details: Offending row, stream, shape pair and the like.
        exit_code: Process exit code the command ends with.
    """
    error: Dict[str, Any] = {"code": error_code, "message": error_message}
    if details:
        error["details"] = details
    if exit_code is not None:
        error["exit_code"] = exit_code
    response = _envelope("error", operation)
    response["error"] = error
    return response
