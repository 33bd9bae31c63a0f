"""Handler package: one request/result pipeline per command."""

from __future__ import annotations

from .ablation import AblationRequest, AblationResult, AblationRunner, DatasetFiles
from .converter import ConversionProgress, ConversionRequest, ConversionResult, ImageConverter
from .evaluator import EvaluationRequest, EvaluationResult, Evaluator
from .generator import DatasetGenerator, GenerationRequest, GenerationResult
from .inference import DecodeRequest, DecodeResult, decode_image
from .trainer import JointTrainer, TrainRequest, TrainResult

__all__ = [
    "AblationRequest",
    "AblationResult",
    "AblationRunner",
    "DatasetFiles",
    "ConversionProgress",
    "ConversionRequest",
    "ConversionResult",
    "ImageConverter",
    "EvaluationRequest",
    "EvaluationResult",
    "Evaluator",
    "DatasetGenerator",
    "GenerationRequest",
    "GenerationResult",
    "DecodeRequest",
    "DecodeResult",
    "decode_image",
    "JointTrainer",
    "TrainRequest",
    "TrainResult",
]
