"""Bidirectional recurrent layers over (B, T, features) sequences."""

from __future__ import annotations

from typing import List

import numpy as np

from ..exceptions import ConfigError
from ..numkit import Linear, Module, Tensor, ops


class GRUCell(Module):
    """Gated recurrent unit; input projections are computed for all steps at once."""

    def __init__(self, in_features: int, hidden: int, rng: np.random.Generator):
        self.input_proj = Linear(in_features, 3 * hidden, rng)
        self.hidden_proj = Linear(hidden, 3 * hidden, rng, bias=False)
        self.hidden = hidden

    def step(self, x_t: Tensor, h: Tensor) -> Tensor:
        hd = self.hidden
        hp = self.hidden_proj(h)
        z = ops.sigmoid(ops.add(x_t[:, :hd], hp[:, :hd]))
        r = ops.sigmoid(ops.add(x_t[:, hd:2 * hd], hp[:, hd:2 * hd]))
        n = ops.tanh(ops.add(x_t[:, 2 * hd:], ops.multiply(r, hp[:, 2 * hd:])))
        # h' = (1 - z) * n + z * h
        return ops.add(n, ops.multiply(z, ops.sub(h, n)))


class TanhCell(Module):
    def __init__(self, in_features: int, hidden: int, rng: np.random.Generator):
        self.input_proj = Linear(in_features, hidden, rng)
        self.hidden_proj = Linear(hidden, hidden, rng, bias=False)
        self.hidden = hidden

    def step(self, x_t: Tensor, h: Tensor) -> Tensor:
        return ops.tanh(ops.add(x_t, self.hidden_proj(h)))


CELLS = {"gru": GRUCell, "tanh": TanhCell}


def make_cell(kind: str, in_features: int, hidden: int, rng: np.random.Generator) -> Module:
    if kind not in CELLS:
        raise ConfigError(f"unknown rnn_cell '{kind}'", key="encoder.rnn_cell")
    return CELLS[kind](in_features, hidden, rng)


class BiRecurrent(Module):
    """Two independent cells read the sequence in opposite directions.

    Output at step t is ``[forward_t, backward_t]`` of width ``2 * hidden``.
    """

    def __init__(self, in_features: int, hidden: int, cell: str, rng: np.random.Generator):
        self.forward_cell = make_cell(cell, in_features, hidden, rng)
        self.backward_cell = make_cell(cell, in_features, hidden, rng)
        self.hidden = hidden

    def __call__(self, x: Tensor) -> Tensor:
        forward = self._run(self.forward_cell, x, reverse=False)
        backward = self._run(self.backward_cell, x, reverse=True)
        return ops.concatenate([forward, backward], axis=2)

    def _run(self, cell: Module, x: Tensor, reverse: bool) -> Tensor:
        batch, steps, _ = x.shape
        projected = cell.input_proj(x)
        h = Tensor(np.zeros((batch, self.hidden)))
        outputs: List[Tensor] = [None] * steps  # type: ignore[list-item]
        order = range(steps - 1, -1, -1) if reverse else range(steps)
        for t in order:
            h = cell.step(projected[:, t, :], h)
            outputs[t] = h
        return ops.stack(outputs, axis=1)
