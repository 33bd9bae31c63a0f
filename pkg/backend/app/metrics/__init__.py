"""Evaluation metrics for attribute recognition and re-identification."""

from .attributes import AttributeEvalReport, attribute_accuracy, chance_level
from .reid import (
    RankingResult,
    RetrievalProtocol,
    average_precision,
    cmc_map,
    distance_matrix,
    pairwise_distance,
)

__all__ = [
    "AttributeEvalReport",
    "attribute_accuracy",
    "chance_level",
    "RankingResult",
    "RetrievalProtocol",
    "average_precision",
    "cmc_map",
    "distance_matrix",
    "pairwise_distance",
]
