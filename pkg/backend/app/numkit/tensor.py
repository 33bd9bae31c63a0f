"""Dense float64 tensors and the dynamic tape that records them.

A :class:`Tape` is rebuilt for every forward pass. Operations executed while a
tape is active (``with Tape() as tape:``) append a :class:`TapeRecord`; anything
computed outside a tape is plain inference and is never recorded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ContractError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ACTIVE_TAPES: List["Tape"] = []


class Tensor:
    """Row-major float64 array with an optional gradient buffer.

    Attributes:
        values: The element buffer.
        requires_grad: Whether backward populates ``grad`` for this tensor.
        grad: Same-shape gradient buffer, or None before the first backward.
        name: Optional parameter name used by optimizers and checkpoints.
    """

    __array_priority__ = 100

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(
                "item() needs a single-element tensor", details={"shape": list(self.shape)}
            )
        return float(self.values.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.values

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.values)

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64).reshape(self.shape)
        else:
            self.grad += grad

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the definitions live in ops.
    def __add__(self, other):
        return _ops().add(self, other)

    def __radd__(self, other):
        return _ops().add(other, self)

    def __sub__(self, other):
        return _ops().sub(self, other)

    def __rsub__(self, other):
        return _ops().sub(other, self)

    def __mul__(self, other):
        return _ops().multiply(self, other)

    def __rmul__(self, other):
        return _ops().multiply(other, self)

    def __neg__(self):
        return _ops().neg(self)

    def __matmul__(self, other):
        return _ops().matmul(self, other)

    def __getitem__(self, key):
        return _ops().index(self, key)


def _ops():
    from . import ops

    return ops


@dataclass
class TapeRecord:
    """One executed differentiable operation."""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Ordered record of executed operations for one forward pass."""

    def __init__(self) -> None:
        self.records: List[TapeRecord] = []
        self._outputs: set = set()

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc_info) -> None:
        _ACTIVE_TAPES.remove(self)

    def __len__(self) -> int:
        return len(self.records)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward_fn: BackwardFn) -> None:
        self.records.append(TapeRecord(op, tuple(inputs), output, backward_fn))
        self._outputs.add(id(output))

    def produced(self, tensor: Tensor) -> bool:
        return id(tensor) in self._outputs


def active_tape() -> Optional[Tape]:
    """Return the innermost active tape, if any."""
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate ``grad`` on every requires_grad tensor reachable from ``loss``.

    Records are visited once each, in reverse tape order, so every consumer of a
    tensor has contributed to its gradient before the tensor's own record runs.
    Gradients accumulate additively; callers zero them between batches.

    Raises:
        ContractError: If ``loss`` is not a scalar produced on ``tape``.
    """
    if loss.size != 1:
        raise ContractError(
            "backward needs a scalar loss", details={"shape": list(loss.shape)}
        )
    if not tape.produced(loss):
        raise ContractError("loss was not produced on this tape")

    loss.accumulate_grad(np.ones_like(loss.values))
    for record in reversed(tape.records):
        out_grad = record.output.grad
        if out_grad is None:
            continue
        input_grads = record.backward(out_grad)
        for tensor, grad in zip(record.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            tensor.accumulate_grad(grad)
