"""Exceptions related to numeric failures."""

from typing import Optional, Sequence

from .base import SeqAttrError


class NumericError(SeqAttrError):
    """Base class for numeric errors."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message, code="NUMERIC_ERROR", details=details)


class DimensionError(NumericError):
    """Raised when operand shapes are incompatible."""

    def __init__(self, message: str, shapes: Sequence[Sequence[int]] = ()):
        details = {"shapes": [list(shape) for shape in shapes]} if shapes else {}
        super().__init__(message, details=details)
        self.code = "DIMENSION_ERROR"


class NonFiniteError(NumericError):
    """Raised when an operation produces NaN or Inf."""

    def __init__(self, message: str, op: Optional[str] = None):
        super().__init__(message, details={"op": op} if op else None)
        self.code = "NON_FINITE"


class ContractError(NumericError):
    """Raised when a caller breaks an operation precondition."""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message, details=details)
        self.code = "CONTRACT_ERROR"


class LabelIndexError(NumericError):
    """Raised when a class index falls outside the logit range."""

    def __init__(self, message: str, index: Optional[int] = None, num_classes: Optional[int] = None):
        details = {}
        if index is not None:
            details["index"] = index
        if num_classes is not None:
            details["num_classes"] = num_classes
        super().__init__(message, details=details)
        self.code = "LABEL_INDEX_ERROR"


class InfeasibleAlignmentError(NumericError):
    """Raised when a label sequence cannot be aligned to T timesteps."""

    def __init__(self, message: str, timesteps: int, required: int):
        super().__init__(
            message,
            details={"timesteps": timesteps, "required": required, "log_prob": float("-inf")},
        )
        self.code = "CTC_INFEASIBLE"


class InstanceTooLargeError(ContractError):
    """Raised when a brute-force enumeration exceeds the desk-scale guard."""

    def __init__(self, message: str, paths: int, limit: int):
        super().__init__(message, details={"paths": paths, "limit": limit})
        self.code = "INSTANCE_TOO_LARGE"


class TrainingStepError(NumericError):
    """Raised when a training step produces a non-finite loss."""

    def __init__(self, message: str, stream: str, step: Optional[int] = None):
        details = {"stream": stream}
        if step is not None:
            details["step"] = step
        super().__init__(message, details=details)
        self.code = "TRAINING_STEP_ERROR"
