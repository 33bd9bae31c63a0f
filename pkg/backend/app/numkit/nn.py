"""Parameterised layers built on the tape ops."""

from __future__ import annotations

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..exceptions import CheckpointVersionError, DimensionError
from . import ops
from .tensor import Tensor


class Module:
    """Container of named parameters and child modules.

    Parameter order follows attribute assignment order, so ``named_parameters``
    is deterministic and checkpoints list tensors in the same order every run.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> List[Tensor]:
        return [param for _, param in self.named_parameters()]

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: param.values.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True) -> None:
        """Copy arrays into parameters.

        Raises:
            CheckpointVersionError: On a missing name (when ``strict``) or a shape
                that differs from the configured parameter.
        """
        for name, param in self.named_parameters():
            if name not in state:
                if strict:
                    raise CheckpointVersionError(
                        f"checkpoint has no tensor '{name}'", details={"parameter": name}
                    )
                continue
            incoming = np.asarray(state[name], dtype=np.float64)
            if incoming.shape != param.shape:
                raise CheckpointVersionError(
                    f"shape of '{name}' differs from the configured model",
                    details={
                        "parameter": name,
                        "expected": list(param.shape),
                        "found": list(incoming.shape),
                    },
                )
            param.values = incoming.copy()
            param.grad = None

    def num_parameters(self) -> int:
        return sum(param.size for param in self.parameters())


def _param(values: np.ndarray) -> Tensor:
    return Tensor(values, requires_grad=True)


class Linear(Module):
    """Affine map over the last axis: ``x @ weight + bias``."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
        init_scale: float = 1.0,
    ):
        bound = init_scale * np.sqrt(1.0 / in_features)
        self.weight = _param(rng.uniform(-bound, bound, size=(in_features, out_features)))
        self.bias = _param(np.zeros(out_features)) if bias else None
        self.in_features = in_features
        self.out_features = out_features

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise DimensionError(
                f"Linear expects {self.in_features} input features, got {x.shape[-1]}",
                shapes=(x.shape, self.weight.shape),
            )
        lead = x.shape[:-1]
        flat = x if x.ndim == 2 else ops.reshape(x, (-1, self.in_features))
        out = ops.matmul(flat, self.weight)
        if self.bias is not None:
            out = ops.add(out, self.bias)
        return out if x.ndim == 2 else ops.reshape(out, lead + (self.out_features,))


class Embedding(Module):
    def __init__(self, num_embeddings: int, dim: int, rng: np.random.Generator):
        self.weight = _param(rng.normal(0.0, dim ** -0.5, size=(num_embeddings, dim)))
        self.num_embeddings = num_embeddings

    def __call__(self, indices) -> Tensor:
        return ops.take(self.weight, indices, axis=0)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = _param(np.ones(dim))
        self.beta = _param(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta, self.eps)


class Conv2d(Module):
    """NCHW convolution with He-uniform initialisation."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size,
        rng: np.random.Generator,
        stride=1,
        padding=0,
        bias: bool = False,
        init_scale: float = 1.0,
    ):
        kh, kw = (kernel_size, kernel_size) if isinstance(kernel_size, int) else kernel_size
        fan_in = in_channels * kh * kw
        bound = init_scale * np.sqrt(6.0 / fan_in)
        self.weight = _param(rng.uniform(-bound, bound, size=(out_channels, in_channels, kh, kw)))
        self.bias: Optional[Tensor] = _param(np.zeros(out_channels)) if bias else None
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)
