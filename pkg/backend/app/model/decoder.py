"""Transformer encoder-decoder over the image feature sequence.

The memory side has no embedding: the features are already continuous, so one
affine layer adapts D to d_model when they differ. The decoder vocabulary has
K + 2 entries: pad/EOS at 0, the attribute labels 1..K, and the start symbol at
K + 1, which is never a valid output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from ..codec import MappingTable
from ..config.constants import DECODER_PAD
from ..config.settings import TransformerConfig
from ..exceptions import DimensionError, LengthError, ParameterError
from ..numkit import Embedding, LayerNorm, Linear, Module, Tensor, ops


def sinusoidal_positions(length: int, d_model: int) -> np.ndarray:
    positions = np.arange(length)[:, None]
    rates = np.exp(-np.log(10000.0) * (np.arange(0, d_model, 2) / d_model))
    table = np.zeros((length, d_model))
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[: d_model // 2])
    return table


def causal_mask(length: int) -> np.ndarray:
    """``mask[i, j]`` is True where position i may attend to j (j ≤ i)."""
    return np.tril(np.ones((length, length), dtype=bool))


def attention_weights(scores: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Row-stochastic weights; masked positions get weight 0."""
    return ops.softmax(scores, axis=-1, mask=mask)


def scaled_dot_attention(
    q: Tensor, k: Tensor, v: Tensor, mask: Optional[np.ndarray] = None
) -> Tuple[Tensor, Tensor]:
    """``softmax(q kᵀ / √d_k) v`` over the last two axes.

    Returns:
        The attended values and the attention weights.

    Raises:
        DimensionError: If q/k widths or k/v lengths disagree.
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise DimensionError(
            "attention operands are incompatible", shapes=(q.shape, k.shape, v.shape)
        )
    axes = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
    scores = ops.multiply(ops.matmul(q, ops.transpose(k, axes)), 1.0 / np.sqrt(q.shape[-1]))
    if mask is not None:
        scores_shape = scores.shape
        try:
            np.broadcast_to(mask, scores_shape)
        except ValueError:
            raise DimensionError(
                "mask does not match the score matrix", shapes=(np.shape(mask), scores_shape)
            ) from None
    weights = attention_weights(scores, mask)
    return ops.matmul(weights, v), weights


class MultiHeadAttention(Module):
    def __init__(self, d_model: int, heads: int, rng: np.random.Generator):
        self.wq = Linear(d_model, d_model, rng)
        self.wk = Linear(d_model, d_model, rng)
        self.wv = Linear(d_model, d_model, rng)
        self.wo = Linear(d_model, d_model, rng)
        self.heads = heads
        self.d_model = d_model

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        per_head = self.d_model // self.heads
        return ops.transpose(ops.reshape(x, (batch, length, self.heads, per_head)), (0, 2, 1, 3))

    def __call__(self, query: Tensor, source: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
        batch, length, _ = query.shape
        attended, _ = scaled_dot_attention(
            self._split(self.wq(query)),
            self._split(self.wk(source)),
            self._split(self.wv(source)),
            mask,
        )
        merged = ops.reshape(ops.transpose(attended, (0, 2, 1, 3)), (batch, length, self.d_model))
        return self.wo(merged)


class FeedForward(Module):
    def __init__(self, d_model: int, inner: int, rng: np.random.Generator):
        self.up = Linear(d_model, inner, rng)
        self.down = Linear(inner, d_model, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.down(ops.relu(self.up(x)))


class EncoderLayer(Module):
    """Self-attention and feed-forward, each followed by add & norm."""

    def __init__(self, cfg: TransformerConfig, rng: np.random.Generator):
        self.attention = MultiHeadAttention(cfg.d_model, cfg.heads, rng)
        self.norm_1 = LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_dim, rng)
        self.norm_2 = LayerNorm(cfg.d_model)

    def __call__(self, x: Tensor) -> Tensor:
        x = self.norm_1(ops.add(x, self.attention(x, x)))
        return self.norm_2(ops.add(x, self.ffn(x)))


class DecoderLayer(Module):
    """Masked self-attention, cross-attention over memory, feed-forward."""

    def __init__(self, cfg: TransformerConfig, rng: np.random.Generator):
        self.self_attention = MultiHeadAttention(cfg.d_model, cfg.heads, rng)
        self.norm_1 = LayerNorm(cfg.d_model)
        self.cross_attention = MultiHeadAttention(cfg.d_model, cfg.heads, rng)
        self.norm_2 = LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_dim, rng)
        self.norm_3 = LayerNorm(cfg.d_model)

    def __call__(self, y: Tensor, memory: Tensor, mask: np.ndarray) -> Tensor:
        y = self.norm_1(ops.add(y, self.self_attention(y, y, mask)))
        y = self.norm_2(ops.add(y, self.cross_attention(y, memory)))
        return self.norm_3(ops.add(y, self.ffn(y)))


class AttentionDecoder(Module):
    """Encoder stack over the feature sequence plus an autoregressive decoder stack."""

    def __init__(
        self,
        cfg: TransformerConfig,
        feature_dim: int,
        vocab_size: int,
        rng: np.random.Generator,
        memory_length: int = 64,
    ):
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.input_proj: Optional[Linear] = (
            Linear(feature_dim, cfg.d_model, rng) if feature_dim != cfg.d_model else None
        )
        self.encoder_layers = [EncoderLayer(cfg, rng) for _ in range(cfg.layers)]
        self.embedding = Embedding(vocab_size, cfg.d_model, rng)
        self.decoder_layers = [DecoderLayer(cfg, rng) for _ in range(cfg.layers)]
        self.output = Linear(cfg.d_model, vocab_size, rng)
        self._positions = sinusoidal_positions(max(memory_length, cfg.max_len), cfg.d_model)

    def _positional(self, length: int) -> np.ndarray:
        if length > self._positions.shape[0]:
            self._positions = sinusoidal_positions(length, self.cfg.d_model)
        return self._positions[:length]

    def encode_memory(self, x: Tensor) -> Tensor:
        """(B, T, D) features → (B, T, d_model) memory."""
        memory = self.input_proj(x) if self.input_proj is not None else x
        memory = ops.add(memory, self._positional(x.shape[1]))
        for layer in self.encoder_layers:
            memory = layer(memory)
        return memory

    def decode(self, memory: Tensor, decoder_input: np.ndarray) -> Tensor:
        """Vocabulary logits (B, L, K+2) for vocabulary-index inputs (B, L)."""
        decoder_input = np.asarray(decoder_input, dtype=np.intp)
        if decoder_input.ndim == 1:
            decoder_input = decoder_input[None]
        length = decoder_input.shape[1]
        if length > self.cfg.max_len:
            raise LengthError(
                f"decoder input of length {length} exceeds max_len {self.cfg.max_len}",
                length=length,
                max_len=self.cfg.max_len,
            )
        y = ops.add(self.embedding(decoder_input), self._positional(length))
        mask = causal_mask(length)
        for layer in self.decoder_layers:
            y = layer(y, memory, mask)
        return self.output(y)


def decode_teacher_forced(decoder: AttentionDecoder, memory: Tensor, decoder_input: np.ndarray) -> Tensor:
    """Logits for every position given the shifted ground truth."""
    return decoder.decode(memory, decoder_input)


def attribute_loss(logits: Tensor, target: np.ndarray, class_mask: Optional[np.ndarray] = None) -> Tensor:
    """Mean cross-entropy over all positions, pad positions included as class 0.

    With the start class masked, uniform logits give ``ln(K + 1)``.
    """
    target = np.asarray(target, dtype=np.intp)
    if target.ndim == 1 and logits.ndim == 3:
        target = target[None]
    if logits.shape[:-1] != target.shape:
        raise DimensionError(
            "logits and target disagree", shapes=(logits.shape, target.shape)
        )
    return ops.cross_entropy(logits, target, class_mask)


@dataclass(frozen=True)
class BeamHypothesis:
    """A partial label sequence (start symbol and EOS excluded)."""

    labels: Tuple[int, ...]
    log_prob: float
    finished: bool = False

    def sort_key(self) -> Tuple[float, int, Tuple[int, ...]]:
        return (-self.log_prob, len(self.labels), self.labels)


def _as_memory(memory: Tensor) -> Tensor:
    return memory if memory.ndim == 3 else ops.reshape(memory, (1,) + memory.shape)


def _next_log_probs(
    decoder: AttentionDecoder, memory: Tensor, table: MappingTable, prefixes: Sequence[Tuple[int, ...]]
) -> np.ndarray:
    """Log-probabilities over the emittable classes 0..K for each prefix."""
    start = table.num_labels + 1
    inputs = np.array([(start,) + prefix for prefix in prefixes], dtype=np.intp)
    batch_memory = memory if len(prefixes) == 1 else Tensor(
        np.repeat(memory.values, len(prefixes), axis=0)
    )
    logits = decoder.decode(batch_memory, inputs).values[:, -1, : table.num_labels + 1]
    return log_softmax(logits, axis=-1)


def _label_budget(decoder: AttentionDecoder, max_len: Optional[int]) -> int:
    return (max_len if max_len is not None else decoder.cfg.max_len) - 1


def greedy_decode(
    decoder: AttentionDecoder, memory: Tensor, table: MappingTable, max_len: Optional[int] = None
) -> BeamHypothesis:
    """Take the most likely class at each step (lowest index on ties)."""
    memory = _as_memory(memory)
    budget = _label_budget(decoder, max_len)
    labels: Tuple[int, ...] = ()
    total = 0.0
    while True:
        step = _next_log_probs(decoder, memory, table, [labels])[0]
        choice = int(np.argmax(step))
        total += float(step[choice])
        if choice == DECODER_PAD:
            break
        labels = labels + (choice,)
        if len(labels) >= budget:
            break
    return BeamHypothesis(labels, total, finished=True)


def beam_search(
    decoder: AttentionDecoder,
    memory: Tensor,
    table: MappingTable,
    width: int,
    max_len: Optional[int] = None,
) -> BeamHypothesis:
    """Length-bounded beam search from the start symbol.

    Hypotheses finish on EOS or when they hold ``max_len - 1`` labels. Candidates
    are ranked by (higher log-probability, shorter, lexicographically smaller).
    For ``width > 1`` the greedy hypothesis competes too, so a wider beam never
    returns a lower-scoring sequence than width 1.
    """
    if width < 1:
        raise ParameterError("beam width must be at least 1", param_name="beam_width")
    memory = _as_memory(memory)
    budget = _label_budget(decoder, max_len)
    alive: List[BeamHypothesis] = [BeamHypothesis((), 0.0)]
    finished: List[BeamHypothesis] = []

    while alive:
        step = _next_log_probs(decoder, memory, table, [h.labels for h in alive])
        candidates: List[BeamHypothesis] = []
        for hyp, log_probs in zip(alive, step):
            for label, log_prob in enumerate(log_probs):
                score = hyp.log_prob + float(log_prob)
                if label == DECODER_PAD:
                    candidates.append(BeamHypothesis(hyp.labels, score, finished=True))
                else:
                    labels = hyp.labels + (label,)
                    candidates.append(BeamHypothesis(labels, score, finished=len(labels) >= budget))
        candidates.sort(key=BeamHypothesis.sort_key)
        kept = candidates[:width]
        finished.extend(h for h in kept if h.finished)
        alive = [h for h in kept if not h.finished]
        if finished and alive:
            best_finished = max(h.log_prob for h in finished)
            if best_finished >= max(h.log_prob for h in alive):
                break

    if width > 1:
        finished.append(greedy_decode(decoder, memory, table, max_len))
    return min(finished, key=BeamHypothesis.sort_key)
