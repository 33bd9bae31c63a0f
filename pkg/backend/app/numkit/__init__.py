"""Dense float64 tensors with reverse-mode differentiation.

Typical usage:
    ```python
    from app.numkit import Tape, Tensor, backward, ops

    w = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum(w * w)
    backward(loss, tape)
    # w.grad == [2, 4, 6]
    ```
"""

from . import ops
from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import check_gradients, max_relative_error, numeric_grad, relative_error
from .nn import Conv2d, Embedding, LayerNorm, Linear, Module
from .optim import AdamState, adam_step
from .tensor import Tape, TapeRecord, Tensor, active_tape, backward

__all__ = [
    "ops",
    "Tensor",
    "Tape",
    "TapeRecord",
    "active_tape",
    "backward",
    "Module",
    "Linear",
    "Embedding",
    "LayerNorm",
    "Conv2d",
    "AdamState",
    "adam_step",
    "encode_checkpoint",
    "decode_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "check_gradients",
    "max_relative_error",
    "numeric_grad",
    "relative_error",
]
