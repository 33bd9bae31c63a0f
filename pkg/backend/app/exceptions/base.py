"""Root of the seqattr exception hierarchy."""

from typing import Any, Dict, Optional


class SeqAttrError(Exception):
    """Base class for all seqattr exceptions.

    Attributes:
        message: Human-readable error message.
        code: Machine-readable error code.
        details: Offending row, stream, shapes and the like.
        exit_code: Process exit code the CLI reports for this error family.
    """

    exit_code: int = 3

    def __init__(self, message: str, code: str = "INTERNAL_ERROR", details: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Keyword arguments of ``format_error`` for this exception."""
        return {
            "error_message": self.message,
            "error_code": self.code,
            "details": self.details,
            "exit_code": self.exit_code,
        }
