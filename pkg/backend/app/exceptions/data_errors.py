"""Exceptions related to tables, manifests, images and checkpoints."""

from typing import Optional

from .base import SeqAttrError


class DataError(SeqAttrError):
    """Base class for data errors."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None, details: Optional[dict] = None):
        details = details or {}
        if path:
            details["path"] = path
        super().__init__(message, code="DATA_ERROR", details=details)


class CodecError(DataError):
    """Raised when an attribute record cannot be mapped to labels."""

    def __init__(self, message: str, group: Optional[str] = None, value: Optional[str] = None):
        details = {}
        if group is not None:
            details["group"] = group
        if value is not None:
            details["value"] = value
        super().__init__(message, details=details)
        self.code = "CODEC_ERROR"


class TableFormatError(DataError):
    """Raised when a mapping table file is malformed or not a bijection."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message, path=path, details={"line": line} if line else None)
        self.code = "TABLE_FORMAT_ERROR"


class LengthError(DataError):
    """Raised when a sequence exceeds the configured maximum length."""

    def __init__(self, message: str, length: int, max_len: int):
        super().__init__(message, details={"length": length, "max_len": max_len})
        self.code = "LENGTH_ERROR"


class IngestionError(DataError):
    """Raised when a manifest row fails validation."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        details = {}
        if row is not None:
            details["row"] = row
        if column is not None:
            details["column"] = column
        super().__init__(message, path=path, details=details)
        self.code = "INGESTION_ERROR"


class SpecError(DataError):
    """Raised when a synthetic dataset specification cannot be satisfied."""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message, details=details)
        self.code = "SPEC_ERROR"


class ImageFormatError(DataError):
    """Raised when an image file is not a valid SIMG container."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, path=path)
        self.code = "IMAGE_FORMAT_ERROR"


class CheckpointError(DataError):
    """Raised when a checkpoint file cannot be read or written."""

    def __init__(self, message: str, path: Optional[str] = None, details: Optional[dict] = None):
        super().__init__(message, path=path, details=details)
        self.code = "CHECKPOINT_ERROR"


class CheckpointVersionError(CheckpointError):
    """Raised when a checkpoint does not match the configured model."""

    def __init__(self, message: str, path: Optional[str] = None, details: Optional[dict] = None):
        super().__init__(message, path=path, details=details)
        self.code = "CHECKPOINT_VERSION"
