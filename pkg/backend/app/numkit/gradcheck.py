"""Central finite-difference gradient checker."""

from __future__ import annotations

from typing import Callable, Dict, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward

DEFAULT_STEP = 1e-6


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / max(||a|| + ||n||, 1e-10)``."""
    diff = np.linalg.norm(analytic - numeric)
    return float(diff / max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-10))


def numeric_grad(fn: Callable[[], Tensor], tensor: Tensor, step: float = DEFAULT_STEP) -> np.ndarray:
    tensor.values = np.array(tensor.values, dtype=np.float64)
    grad = np.zeros_like(tensor.values)
    flat = tensor.values.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = fn().item()
        flat[i] = original - step
        minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * step)
    return grad


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    step: float = DEFAULT_STEP,
) -> Dict[int, float]:
    """Compare tape gradients of scalar ``fn()`` against central differences.

    ``fn`` must rebuild its output from the current values of ``tensors`` each
    call. Returns the relative error per tensor position.
    """
    for tensor in tensors:
        tensor.grad = None
    with Tape() as tape:
        loss = fn()
    backward(loss, tape)
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.values) for t in tensors
    ]
    errors = {}
    for i, tensor in enumerate(tensors):
        errors[i] = relative_error(analytic[i], numeric_grad(fn, tensor, step))
    return errors


def max_relative_error(fn: Callable[[], Tensor], tensors: Sequence[Tensor], step: float = DEFAULT_STEP) -> float:
    return max(check_gradients(fn, tensors, step).values())
