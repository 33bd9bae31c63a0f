"""Custom exception hierarchy for the seqattr backend.

This package defines all custom exceptions used throughout the application
to handle errors in a structured and predictable way. Each family carries the
exit code the command-line entry point reports for it.
"""

from .base import SeqAttrError
from .validation_errors import (
    ValidationError,
    ConfigError,
    ParameterError,
    UsageError,
)
from .processing_errors import (
    NumericError,
    DimensionError,
    NonFiniteError,
    ContractError,
    LabelIndexError,
    InfeasibleAlignmentError,
    InstanceTooLargeError,
    TrainingStepError,
)
from .data_errors import (
    DataError,
    CodecError,
    TableFormatError,
    LengthError,
    IngestionError,
    SpecError,
    ImageFormatError,
    CheckpointError,
    CheckpointVersionError,
)

__all__ = [
    "SeqAttrError",
    "ValidationError",
    "ConfigError",
    "ParameterError",
    "UsageError",
    "NumericError",
    "DimensionError",
    "NonFiniteError",
    "ContractError",
    "LabelIndexError",
    "InfeasibleAlignmentError",
    "InstanceTooLargeError",
    "TrainingStepError",
    "DataError",
    "CodecError",
    "TableFormatError",
    "LengthError",
    "IngestionError",
    "SpecError",
    "ImageFormatError",
    "CheckpointError",
    "CheckpointVersionError",
]
