"""Exceptions related to configuration and command-line validation."""

from typing import Optional

from .base import SeqAttrError


class ValidationError(SeqAttrError):
    """Base class for validation errors."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message, code="VALIDATION_ERROR", details=details)


class ConfigError(ValidationError):
    """Raised when a configuration file, section, key or value is invalid."""

    def __init__(self, message: str, key: Optional[str] = None, details: Optional[dict] = None):
        details = details or {}
        if key:
            details["key"] = key
        super().__init__(message, details=details)
        self.code = "CONFIG_ERROR"


class ParameterError(ValidationError):
    """Raised when a single parameter value is out of range."""

    def __init__(self, message: str, param_name: Optional[str] = None, details: Optional[dict] = None):
        details = details or {}
        if param_name:
            details["parameter"] = param_name
        super().__init__(message, details=details)
        self.code = "INVALID_PARAMETER"


class UsageError(ValidationError):
    """Raised when a command or ablation kind is not recognised."""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message, details=details)
        self.code = "USAGE_ERROR"
