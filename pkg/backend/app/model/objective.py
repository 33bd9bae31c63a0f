"""Three-term training objective."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.settings import JointLossConfig
from ..exceptions import ContractError, TrainingStepError
from ..numkit import Tensor, ops


@dataclass(frozen=True)
class LossBreakdown:
    """Scalar values of one step's losses; disabled streams are None."""

    l_id: Optional[float]
    l_ctc: Optional[float]
    l_at: Optional[float]
    joint: float


def joint_loss(
    l_id: Optional[Tensor],
    l_ctc: Optional[Tensor],
    l_at: Optional[Tensor],
    cfg: JointLossConfig,
    step: Optional[int] = None,
) -> Tensor:
    """``λ·l_id + l_ctc + l_at`` over the streams that are present.

    Raises:
        TrainingStepError: Naming the first stream whose loss is not finite.
        ContractError: If every stream is missing.
    """
    if cfg.lambda_id < 0:
        raise ContractError("lambda must be nonnegative", details={"lambda": cfg.lambda_id})
    for stream, loss in (("id", l_id), ("ctc", l_ctc), ("attention", l_at)):
        if loss is not None and not np.all(np.isfinite(loss.values)):
            raise TrainingStepError(f"{stream} loss is not finite", stream=stream, step=step)

    terms = []
    if l_id is not None:
        terms.append(ops.multiply(l_id, cfg.lambda_id))
    terms.extend(loss for loss in (l_ctc, l_at) if loss is not None)
    if not terms:
        raise ContractError("joint loss needs at least one stream")
    total = terms[0]
    for term in terms[1:]:
        total = ops.add(total, term)
    return total


def breakdown(
    l_id: Optional[Tensor], l_ctc: Optional[Tensor], l_at: Optional[Tensor], joint: Tensor
) -> LossBreakdown:
    def scalar(loss: Optional[Tensor]) -> Optional[float]:
        return None if loss is None else loss.item()

    return LossBreakdown(scalar(l_id), scalar(l_ctc), scalar(l_at), joint.item())
