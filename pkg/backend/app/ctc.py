"""Connectionist temporal classification.

Two implementations of ``P(y | x)`` live here: the log-space forward recursion
(plain numpy, plus a tape-recorded variant used as the training loss) and an
exhaustive enumeration of alignments kept as the reference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .config.constants import BRUTE_FORCE_PATH_LIMIT, CTC_BLANK
from .exceptions import (
    ContractError,
    InfeasibleAlignmentError,
    InstanceTooLargeError,
    LabelIndexError,
)
from .codec import extend_with_blanks
from .numkit import Tensor, ops


@dataclass(frozen=True)
class PosteriorMatrix:
    """T × (K+1) per-timestep label distribution; column 0 is the blank."""

    q: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=np.float64)
        if q.ndim != 2:
            raise ContractError("posterior matrix must be rank 2", details={"shape": list(q.shape)})
        if np.any(q < 0.0) or np.any(q > 1.0):
            raise ContractError("posterior entries must lie in [0, 1]")
        if not np.allclose(q.sum(axis=1), 1.0, rtol=0.0, atol=1e-9):
            raise ContractError("posterior rows must sum to 1")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "PosteriorMatrix":
        logits = np.asarray(logits, dtype=np.float64)
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        return cls(shifted / shifted.sum(axis=1, keepdims=True))

    @property
    def timesteps(self) -> int:
        return self.q.shape[0]

    @property
    def num_classes(self) -> int:
        return self.q.shape[1]


PosteriorLike = Union[PosteriorMatrix, np.ndarray]


def _as_array(q: PosteriorLike) -> np.ndarray:
    return q.q if isinstance(q, PosteriorMatrix) else PosteriorMatrix(q).q


def collapse(path: Iterable[int]) -> Tuple[int, ...]:
    """Merge consecutive repeats, then drop blanks."""
    out: List[int] = []
    previous = None
    for label in path:
        label = int(label)
        if label != previous and label != CTC_BLANK:
            out.append(label)
        previous = label
    return tuple(out)


def required_steps(y: Sequence[int]) -> int:
    """Fewest timesteps that can emit ``y``: one per label plus one per adjacent repeat."""
    labels = [int(label) for label in y]
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return len(labels) + repeats


def _check_alignable(y: Sequence[int], timesteps: int, num_classes: int) -> Tuple[int, ...]:
    labels = tuple(int(label) for label in y)
    for label in labels:
        if not 1 <= label < num_classes:
            raise LabelIndexError(
                f"label {label} outside 1..{num_classes - 1}", index=label, num_classes=num_classes
            )
    needed = required_steps(labels)
    if timesteps < needed:
        raise InfeasibleAlignmentError(
            f"{timesteps} timesteps cannot emit a sequence needing {needed}",
            timesteps=timesteps,
            required=needed,
        )
    return labels


def _skip_allowed(extended: Sequence[int]) -> np.ndarray:
    skip = np.zeros(len(extended), dtype=bool)
    for s in range(2, len(extended)):
        skip[s] = extended[s] != CTC_BLANK and extended[s] != extended[s - 2]
    return skip


def ctc_log_prob(q: PosteriorLike, y: Sequence[int]) -> float:
    """``ln P(y | x)`` by the forward recursion over the blank-extended labels.

    Raises:
        InfeasibleAlignmentError: If ``T`` is shorter than ``required_steps(y)``.
        LabelIndexError: If a label is outside ``1..K``.
    """
    q = _as_array(q)
    timesteps, num_classes = q.shape
    labels = _check_alignable(y, timesteps, num_classes)
    extended = np.array(extend_with_blanks(labels))
    skip = _skip_allowed(extended)
    with np.errstate(divide="ignore"):
        log_q = np.log(q[:, extended])

    alpha = np.full(len(extended), -np.inf)
    alpha[:2] = log_q[0, :2]
    for t in range(1, timesteps):
        stay = alpha
        step = np.concatenate(([-np.inf], alpha[:-1]))
        jump = np.where(skip, np.concatenate(([-np.inf, -np.inf], alpha[:-2])), -np.inf)
        alpha = np.logaddexp(np.logaddexp(stay, step), jump) + log_q[t]
    with np.errstate(divide="ignore"):
        return float(logsumexp(alpha[-2:]))


def _forward_tensor(log_probs: Tensor, targets: Sequence[Sequence[int]]) -> Tensor:
    """Per-item ``ln P(y_b | x_b)`` for ``log_probs`` of shape (B, T, C), on the tape.

    Unreachable lattice states are tracked by a boolean mask instead of holding
    −∞, so every recorded value stays finite.
    """
    batch, timesteps, num_classes = log_probs.shape
    checked = [_check_alignable(y, timesteps, num_classes) for y in targets]
    states = 2 * max(len(y) for y in checked) + 1

    extended = np.zeros((batch, states), dtype=np.intp)
    valid = np.zeros((batch, states), dtype=bool)
    skip = np.zeros((batch, states), dtype=bool)
    for b, labels in enumerate(checked):
        ext = extend_with_blanks(labels)
        extended[b, : len(ext)] = ext
        valid[b, : len(ext)] = True
        skip[b, : len(ext)] = _skip_allowed(ext)

    emissions = ops.index(
        log_probs,
        (np.arange(batch)[:, None, None], np.arange(timesteps)[None, :, None], extended[:, None, :]),
    )
    sources = np.stack([np.arange(states) + 2, np.arange(states) + 1, np.arange(states)], axis=1)

    reach = np.zeros((batch, states), dtype=bool)
    reach[:, :2] = valid[:, :2]
    alpha = emissions[:, 0, :]
    for t in range(1, timesteps):
        padded = ops.concatenate([Tensor(np.zeros((batch, 2))), alpha], axis=1)
        candidates = ops.index(padded, (slice(None), sources))
        from_step = np.concatenate([np.zeros((batch, 1), dtype=bool), reach[:, :-1]], axis=1)
        from_jump = np.concatenate([np.zeros((batch, 2), dtype=bool), reach[:, :-2]], axis=1) & skip
        mask = np.stack([reach, from_step, from_jump], axis=2) & valid[:, :, None]
        alpha = ops.add(ops.masked_logsumexp(candidates, mask, axis=2), emissions[:, t, :])
        reach = mask.any(axis=2)

    final = np.zeros((batch, states), dtype=bool)
    for b, labels in enumerate(checked):
        last = 2 * len(labels)
        final[b, max(last - 1, 0): last + 1] = True
    return ops.masked_logsumexp(alpha, final & reach, axis=1)


def ctc_loss(logits: Union[Tensor, np.ndarray], y: Sequence[int]) -> Tensor:
    """``−ln P(y | x)`` for one T × (K+1) logit matrix; differentiable."""
    logits = ops.as_tensor(logits)
    batched = ops.reshape(logits, (1,) + logits.shape)
    log_probs = ops.log_softmax(batched, axis=-1)
    return ops.neg(ops.sum(_forward_tensor(log_probs, [y])))


def ctc_loss_batch(logits: Tensor, targets: Sequence[Sequence[int]]) -> Tensor:
    """Mean CTC loss over a (B, T, K+1) batch."""
    if logits.ndim != 3 or logits.shape[0] != len(targets):
        raise ContractError(
            "batch logits must be (B, T, C) with one target per item",
            details={"shape": list(logits.shape), "targets": len(targets)},
        )
    log_probs = ops.log_softmax(logits, axis=-1)
    return ops.neg(ops.mean(_forward_tensor(log_probs, targets)))


@lru_cache(maxsize=64)
def _path_space(num_classes: int, timesteps: int) -> Tuple[np.ndarray, Tuple[Tuple[int, ...], ...]]:
    grids = np.indices((num_classes,) * timesteps).reshape(timesteps, -1).T
    return grids, tuple(collapse(path) for path in grids)


def _enumerate(q: np.ndarray) -> Tuple[np.ndarray, Tuple[Tuple[int, ...], ...]]:
    timesteps, num_classes = q.shape
    paths = num_classes ** timesteps
    if paths > BRUTE_FORCE_PATH_LIMIT:
        raise InstanceTooLargeError(
            f"{paths} alignments exceed the enumeration limit",
            paths=paths,
            limit=BRUTE_FORCE_PATH_LIMIT,
        )
    grids, collapsed = _path_space(num_classes, timesteps)
    probs = np.prod(q[np.arange(timesteps), grids], axis=1)
    return probs, collapsed


def ctc_brute_force(q: PosteriorLike, y: Sequence[int]) -> float:
    """``P(y | x)`` summed over every alignment that collapses to ``y``."""
    q = _as_array(q)
    target = tuple(int(label) for label in y)
    probs, collapsed = _enumerate(q)
    hits = np.fromiter((c == target for c in collapsed), dtype=bool, count=len(collapsed))
    return float(probs[hits].sum())


def ctc_brute_force_all(q: PosteriorLike) -> Dict[Tuple[int, ...], float]:
    """``P(y | x)`` for every label sequence some alignment collapses to."""
    q = _as_array(q)
    probs, collapsed = _enumerate(q)
    totals: Dict[Tuple[int, ...], float] = {}
    for prob, labels in zip(probs, collapsed):
        totals[labels] = totals.get(labels, 0.0) + float(prob)
    return totals


def ctc_greedy_decode(q: Union[PosteriorLike, Tensor]) -> Tuple[int, ...]:
    """Best label per row (lowest index on ties), then collapse."""
    values = q.values if isinstance(q, Tensor) else (q.q if isinstance(q, PosteriorMatrix) else np.asarray(q))
    return collapse(np.argmax(values, axis=1))
