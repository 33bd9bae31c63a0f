"""Attribute recognition scoring: per-group accuracy and mA."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from ..codec import AttributeRecord, MappingTable
from ..exceptions import ContractError


@dataclass(frozen=True)
class AttributeEvalReport:
    """Per-group accuracy, their mean, and how many predictions left a group out.

    Groups absent from every truth record are not scored.
    """

    accuracies: Dict[str, float]
    mean_accuracy: float
    missing: Dict[str, int] = field(default_factory=dict)
    samples: int = 0


def attribute_accuracy(
    predictions: Sequence[AttributeRecord],
    truths: Sequence[AttributeRecord],
    table: MappingTable,
) -> AttributeEvalReport:
    """Score aligned prediction/truth records group by group.

    A group missing from a prediction counts as wrong for that sample; each
    multi-valued group is one decision.

    Raises:
        ContractError: If the lists differ in length or are empty.
    """
    if len(predictions) != len(truths):
        raise ContractError(
            "predictions and truths must be aligned",
            details={"predictions": len(predictions), "truths": len(truths)},
        )
    if not truths:
        raise ContractError("nothing to score")

    accuracies: Dict[str, float] = {}
    missing: Dict[str, int] = {}
    for group in table.group_names:
        correct = total = absent = 0
        for predicted, truth in zip(predictions, truths):
            expected = truth.get(group)
            if expected is None:
                continue
            total += 1
            value = predicted.get(group)
            if value is None:
                absent += 1
            elif value == expected:
                correct += 1
        if total:
            accuracies[group] = correct / total
            missing[group] = absent
    mean = float(np.mean(list(accuracies.values()))) if accuracies else 0.0
    return AttributeEvalReport(accuracies, mean, missing, len(truths))


def chance_level(table: MappingTable) -> float:
    """mA of a uniform random guesser: the mean of 1/|values| over groups."""
    return float(np.mean([1.0 / len(group.values) for group in table.groups]))
