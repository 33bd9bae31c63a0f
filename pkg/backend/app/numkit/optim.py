"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

from ..exceptions import ContractError
from .tensor import Tensor


@dataclass
class AdamState:
    """Moment buffers keyed by parameter name, plus the step counter.

    Defaults follow the usual Adam constants; ``lr`` is mutated in place by the
    learning-rate schedule.
    """

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def decay(self, rate: float) -> None:
        self.lr *= rate

    def to_tensors(self) -> Dict[str, np.ndarray]:
        """Flatten into checkpoint entries under the ``adam/`` prefix."""
        entries = {
            "adam/step": np.array([float(self.step)]),
            "adam/lr": np.array([self.lr]),
        }
        for name in self.m:
            entries[f"adam/m/{name}"] = self.m[name]
            entries[f"adam/v/{name}"] = self.v[name]
        return entries

    @classmethod
    def from_tensors(cls, entries: Dict[str, np.ndarray], **hyper) -> "AdamState":
        state = cls(**hyper)
        if "adam/step" in entries:
            state.step = int(entries["adam/step"][0])
        if "adam/lr" in entries:
            state.lr = float(entries["adam/lr"][0])
        for key, value in entries.items():
            if key.startswith("adam/m/"):
                state.m[key[len("adam/m/"):]] = np.array(value, dtype=np.float64)
            elif key.startswith("adam/v/"):
                state.v[key[len("adam/v/"):]] = np.array(value, dtype=np.float64)
        return state


def adam_step(params: Iterable[Tuple[str, Tensor]], state: AdamState) -> None:
    """Apply one Adam update in place and zero the gradients.

    Args:
        params: ``(name, tensor)`` pairs, as produced by ``Module.named_parameters``.
        state: Optimizer state; its step counter advances by exactly one.

    Raises:
        ContractError: If a parameter has no gradient. Nothing is updated then.
    """
    params = list(params)
    for name, param in params:
        if param.grad is None:
            raise ContractError(
                f"parameter '{name}' has no gradient", details={"parameter": name}
            )

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    step_size = state.lr / bc1

    for name, param in params:
        g = param.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(param.values)
            state.v[name] = np.zeros_like(param.values)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        param.values = param.values - step_size * m / (np.sqrt(v / bc2) + state.eps)
        param.grad = np.zeros_like(param.values)
