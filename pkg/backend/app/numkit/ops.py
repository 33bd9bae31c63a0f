"""Differentiable operations on :class:`~app.numkit.tensor.Tensor`.

Every operation computes its forward value with numpy, checks it is finite and,
when a tape is active and an input requires a gradient, records a backward
closure that returns one gradient (or None) per input.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ContractError, DimensionError, LabelIndexError, NonFiniteError
from .tensor import BackwardFn, Tensor, active_tape

TensorLike = Union[Tensor, float, int, np.ndarray]
Pair = Union[int, Tuple[int, int]]


def as_tensor(value: TensorLike) -> Tensor:
    """Wrap constants so they can enter an operation."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(op: str, inputs: Sequence[Tensor], values: np.ndarray, backward_fn: BackwardFn) -> Tensor:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{op} produced a non-finite value", op=op)
    tape = active_tape()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(values, requires_grad=tracked)
    if tracked:
        tape.record(op, inputs, out, backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out broadcast dimensions so ``grad`` matches ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _pair(value: Pair) -> Tuple[int, int]:
    return (value, value) if isinstance(value, int) else (int(value[0]), int(value[1]))


# ----------------------------------------------------------------------
# Elementwise
# ----------------------------------------------------------------------

def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", (a, b), a.values + b.values, backward_fn)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit("sub", (a, b), a.values - b.values, backward_fn)


def neg(a: Tensor) -> Tensor:
    return _emit("neg", (a,), -a.values, lambda g: (-g,))


def multiply(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("multiply", a, b)

    def backward_fn(g):
        return _unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)

    return _emit("multiply", (a, b), a.values * b.values, backward_fn)


def exp(a: Tensor) -> Tensor:
    out_values = np.exp(a.values)
    return _emit("exp", (a,), out_values, lambda g: (g * out_values,))


def tanh(a: Tensor) -> Tensor:
    out_values = np.tanh(a.values)
    return _emit("tanh", (a,), out_values, lambda g: (g * (1.0 - out_values ** 2),))


def sigmoid(a: Tensor) -> Tensor:
    # Split by sign so neither branch overflows.
    x = a.values
    out_values = np.empty_like(x)
    positive = x >= 0
    out_values[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    ex = np.exp(x[~positive])
    out_values[~positive] = ex / (1.0 + ex)
    return _emit("sigmoid", (a,), out_values, lambda g: (g * out_values * (1.0 - out_values),))


def relu(a: Tensor) -> Tensor:
    mask = a.values > 0
    return _emit("relu", (a,), np.where(mask, a.values, 0.0), lambda g: (g * mask,))


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(
            f"{op}: shapes {a.shape} and {b.shape} do not broadcast", shapes=(a.shape, b.shape)
        ) from None


# ----------------------------------------------------------------------
# Linear algebra
# ----------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes.

    ``a`` may carry leading batch axes; ``b`` either carries the same ones or is
    a rank-2 matrix shared across them.

    Raises:
        DimensionError: Naming both shapes when the operands do not agree.
    """
    a, b = as_tensor(a), as_tensor(b)
    shared_rhs = b.ndim == 2
    compatible = (
        a.ndim >= 2
        and b.ndim >= 2
        and a.shape[-1] == b.shape[-2]
        and (shared_rhs or a.shape[:-2] == b.shape[:-2])
    )
    if not compatible:
        raise DimensionError(
            f"matmul: shapes {a.shape} and {b.shape} are not aligned", shapes=(a.shape, b.shape)
        )

    def backward_fn(g):
        grad_a = g @ np.swapaxes(b.values, -1, -2)
        if shared_rhs:
            flat_a = a.values.reshape(-1, a.shape[-1])
            grad_b = flat_a.T @ g.reshape(-1, g.shape[-1])
        else:
            grad_b = np.swapaxes(a.values, -1, -2) @ g
        return grad_a, grad_b

    return _emit("matmul", (a, b), a.values @ b.values, backward_fn)


# ----------------------------------------------------------------------
# Reductions and shape manipulation
# ----------------------------------------------------------------------

def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _emit("sum", (a,), a.values.sum(axis=axis, keepdims=keepdims), backward_fn)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.values.size if axis is None else int(np.prod([a.shape[ax] for ax in np.atleast_1d(axis)]))

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _emit("mean", (a,), a.values.mean(axis=axis, keepdims=keepdims), backward_fn)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out_values = a.values.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(
            f"reshape: cannot view {a.shape} as {tuple(shape)}", shapes=(a.shape, tuple(shape))
        ) from None
    return _emit("reshape", (a,), out_values, lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _emit("transpose", (a,), a.values.transpose(axes), lambda g: (g.transpose(inverse),))


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out_values = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError(
            "concatenate: shapes disagree off the join axis", shapes=[t.shape for t in tensors]
        ) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concatenate", tensors, out_values, backward_fn)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out_values = np.stack([t.values for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError("stack: shapes differ", shapes=[t.shape for t in tensors]) from None

    def backward_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _emit("stack", tensors, out_values, backward_fn)


def index(a: Tensor, key) -> Tensor:
    """Basic or fancy indexing; the backward scatters with ``np.add.at``."""
    out_values = np.array(a.values[key], dtype=np.float64)

    def backward_fn(g):
        grad = np.zeros_like(a.values)
        np.add.at(grad, key, g)
        return (grad,)

    return _emit("index", (a,), out_values, backward_fn)


def take(a: Tensor, indices, axis: int = 0) -> Tensor:
    """Gather entries along ``axis`` (embedding lookups, label emissions)."""
    indices = np.asarray(indices, dtype=np.intp)
    axis = axis % a.ndim
    if indices.size and (indices.min() < -a.shape[axis] or indices.max() >= a.shape[axis]):
        raise LabelIndexError(
            f"take: index out of range for axis of size {a.shape[axis]}",
            index=int(indices.max()),
            num_classes=a.shape[axis],
        )
    key = (slice(None),) * axis + (indices,)
    return index(a, key)


# ----------------------------------------------------------------------
# Normalised exponentials
# ----------------------------------------------------------------------

def softmax(a: Tensor, axis: int = -1, mask: Optional[np.ndarray] = None) -> Tensor:
    """Stable softmax; entries where ``mask`` is False get probability 0."""
    probs = _softmax_values(a.values, axis, mask)

    def backward_fn(g):
        return (probs * (g - (g * probs).sum(axis=axis, keepdims=True)),)

    return _emit("softmax", (a,), probs, backward_fn)


def _softmax_values(x: np.ndarray, axis: int, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        shifted = x - x.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        if not np.all(mask.any(axis=axis)):
            raise ContractError("softmax: a row is fully masked")
        filled = np.where(mask, x, -np.inf)
        shifted = filled - filled.max(axis=axis, keepdims=True)
        e = np.where(mask, np.exp(np.where(mask, shifted, 0.0)), 0.0)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.values - a.values.max(axis=axis, keepdims=True)
    out_values = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward_fn(g):
        probs = np.exp(out_values)
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _emit("log_softmax", (a,), out_values, backward_fn)


def masked_logsumexp(a: Tensor, mask: np.ndarray, axis: int = 0) -> Tensor:
    """log-sum-exp over the entries selected by ``mask``.

    Slices with no selected entry produce 0.0 and carry no gradient; callers
    track those slices themselves (the CTC recursion keeps a reachability mask).
    """
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape)
    nonempty = mask.any(axis=axis, keepdims=True)
    filled = np.where(mask, a.values, -np.inf)
    peak = np.where(nonempty, filled.max(axis=axis, keepdims=True), 0.0)
    weights = np.where(mask, np.exp(np.where(mask, a.values - peak, 0.0)), 0.0)
    total = weights.sum(axis=axis, keepdims=True)
    out_keep = np.where(nonempty, peak + np.log(np.where(nonempty, total, 1.0)), 0.0)
    out_values = np.squeeze(out_keep, axis=axis)

    def backward_fn(g):
        share = weights / np.where(nonempty, total, 1.0)
        return (np.expand_dims(g, axis) * share,)

    return _emit("masked_logsumexp", (a,), out_values, backward_fn)


def cross_entropy(
    logits: Tensor,
    target,
    class_mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Mean negative log-likelihood of ``target`` under ``softmax(logits)``.

    ``logits`` has classes on its last axis; ``target`` holds one class index per
    leading position (a plain int for rank-1 logits). Classes excluded by
    ``class_mask`` behave as logit −∞.

    Raises:
        LabelIndexError: If a target is outside ``[0, C)`` or is a masked class.
    """
    num_classes = logits.shape[-1]
    target = np.asarray(target, dtype=np.intp)
    if target.shape != logits.shape[:-1]:
        raise DimensionError(
            "cross_entropy: target shape must match the logits' leading axes",
            shapes=(logits.shape, target.shape),
        )
    if target.size and (target.min() < 0 or target.max() >= num_classes):
        bad = int(target.min()) if target.min() < 0 else int(target.max())
        raise LabelIndexError(
            f"target {bad} outside [0, {num_classes})", index=bad, num_classes=num_classes
        )
    if class_mask is not None and not np.all(np.asarray(class_mask, dtype=bool)[target]):
        raise LabelIndexError("target falls on a masked class", num_classes=num_classes)

    probs = _softmax_values(logits.values, -1, class_mask)
    flat_probs = probs.reshape(-1, num_classes)
    flat_target = target.reshape(-1)
    rows = np.arange(flat_target.size)
    count = max(flat_target.size, 1)
    allowed = (
        np.ones(logits.shape, dtype=bool)
        if class_mask is None
        else np.broadcast_to(np.asarray(class_mask, dtype=bool), logits.shape)
    )
    # -log p from the log-domain form so confident logits stay accurate.
    peak = np.where(allowed, logits.values, -np.inf).max(axis=-1, keepdims=True)
    shifted = np.where(allowed, logits.values - peak, 0.0)
    log_norm = np.log(np.where(allowed, np.exp(shifted), 0.0).sum(axis=-1)).reshape(-1)
    picked = shifted.reshape(-1, num_classes)[rows, flat_target]
    loss = float(np.sum(log_norm - picked)) / count

    def backward_fn(g):
        grad = flat_probs.copy()
        grad[rows, flat_target] -= 1.0
        return ((g / count) * grad.reshape(logits.shape),)

    return _emit("cross_entropy", (logits,), np.array(loss), backward_fn)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then scale and shift."""
    mu = x.values.mean(axis=-1, keepdims=True)
    centred = x.values - mu
    inv_std = 1.0 / np.sqrt((centred ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centred * inv_std
    width = x.shape[-1]

    def backward_fn(g):
        dxhat = g * gamma.values
        dx = (inv_std / width) * (
            width * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )
        lead = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _emit("layer_norm", (x, gamma, beta), xhat * gamma.values + beta.values, backward_fn)


# ----------------------------------------------------------------------
# Convolution and pooling (NCHW)
# ----------------------------------------------------------------------

def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: Pair = 1,
    padding: Pair = 0,
) -> Tensor:
    """2-D cross-correlation of ``x`` (B, C, H, W) with ``weight`` (O, C, kh, kw)."""
    if x.ndim != 4 or weight.ndim != 4 or x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"conv2d: input {x.shape} does not match kernel {weight.shape}",
            shapes=(x.shape, weight.shape),
        )
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    batch, channels, height, width = x.shape
    out_channels, _, kh, kw = weight.shape
    ho = conv_output_size(height, kh, sh, ph)
    wo = conv_output_size(width, kw, sw, pw)
    if ho < 1 or wo < 1:
        raise DimensionError(
            f"conv2d: kernel {weight.shape[2:]} larger than padded input {x.shape[2:]}",
            shapes=(x.shape, weight.shape),
        )

    padded = np.pad(x.values, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw][:, :, :ho, :wo]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(batch * ho * wo, channels * kh * kw)
    kernel = weight.values.reshape(out_channels, -1)
    out = cols @ kernel.T
    if bias is not None:
        out = out + bias.values
    out_values = out.reshape(batch, ho, wo, out_channels).transpose(0, 3, 1, 2)

    def backward_fn(g):
        g_rows = g.transpose(0, 2, 3, 1).reshape(-1, out_channels)
        grad_w = (g_rows.T @ cols).reshape(weight.shape)
        grad_cols = (g_rows @ kernel).reshape(batch, ho, wo, channels, kh, kw)
        grad_padded = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                grad_padded[:, :, i:i + sh * ho:sh, j:j + sw * wo:sw] += grad_cols[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)
        grad_x = grad_padded[:, :, ph:ph + height, pw:pw + width]
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return _emit("conv2d", inputs, out_values, backward_fn)


def max_pool2d(x: Tensor, kernel: Pair, stride: Optional[Pair] = None, padding: Pair = 0) -> Tensor:
    """Max pooling over (H, W); ties route the gradient to the first maximum."""
    kh, kw = _pair(kernel)
    sh, sw = _pair(stride if stride is not None else kernel)
    ph, pw = _pair(padding)
    batch, channels, height, width = x.shape
    ho = conv_output_size(height, kh, sh, ph)
    wo = conv_output_size(width, kw, sw, pw)
    if ho < 1 or wo < 1:
        raise DimensionError(
            f"max_pool2d: window {(kh, kw)} larger than input {x.shape[2:]}", shapes=(x.shape,)
        )

    padded = np.pad(
        x.values, ((0, 0), (0, 0), (ph, ph), (pw, pw)), constant_values=-np.inf
    )
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw][:, :, :ho, :wo]
    flat = windows.reshape(batch, channels, ho, wo, kh * kw)
    winner = flat.argmax(axis=-1)
    out_values = np.take_along_axis(flat, winner[..., None], axis=-1)[..., 0]

    def backward_fn(g):
        grad_padded = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                hit = winner == i * kw + j
                grad_padded[:, :, i:i + sh * ho:sh, j:j + sw * wo:sw] += g * hit
        return (grad_padded[:, :, ph:ph + height, pw:pw + width],)

    return _emit("max_pool2d", (x,), out_values, backward_fn)
