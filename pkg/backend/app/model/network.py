"""The joint network: one base model feeding the identity, CTC and attention streams."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..codec import MappingTable, prepare_decoder_io
from ..config.settings import AppConfig, JointLossConfig
from ..ctc import ctc_loss_batch
from ..exceptions import CheckpointVersionError, NonFiniteError, TrainingStepError
from ..numkit import AdamState, Linear, Module, Tensor, load_checkpoint, save_checkpoint
from .decoder import (
    AttentionDecoder,
    BeamHypothesis,
    attribute_loss,
    beam_search,
    decode_teacher_forced,
    greedy_decode,
)
from .encoder import (
    BaseModel,
    EncodedSequence,
    IdHead,
    ctc_projection,
    extract_reid_features,
    id_logits,
    id_loss,
    to_nchw,
)


@contextmanager
def _stream(name: str) -> Iterator[None]:
    """Re-raise a non-finite forward value as a failure of stream ``name``."""
    try:
        yield
    except NonFiniteError as exc:
        raise TrainingStepError(f"{name} stream: {exc.message}", stream=name) from exc


@dataclass
class StreamLosses:
    """Per-batch mean losses; a disabled stream is None."""

    l_id: Optional[Tensor]
    l_ctc: Optional[Tensor]
    l_at: Optional[Tensor]


class JointNetwork(Module):
    """Base model plus identity head, CTC projection and attention decoder."""

    def __init__(self, cfg: AppConfig, table: MappingTable, num_identities: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        enc = cfg.encoder
        self.base = BaseModel(enc, rng)
        self.id_head = IdHead(enc.conv_feature_dim(), enc.fc0_dim, num_identities, rng)
        self.ctc_head = Linear(enc.feature_dim, table.num_labels + 1, rng)
        self.decoder = AttentionDecoder(
            cfg.decoder, enc.feature_dim, table.vocab_size, rng, memory_length=enc.sequence_length
        )
        self.cfg = cfg
        self.table = table
        self.num_identities = num_identities

    def stream_parameters(self, objective: JointLossConfig) -> List[Tuple[str, Tensor]]:
        """Parameters the optimizer updates under ``objective``."""
        groups = [("base.", self.base), ("id_head.", self.id_head)]
        if objective.use_ctc:
            groups.append(("ctc_head.", self.ctc_head))
        if objective.use_attention:
            groups.append(("decoder.", self.decoder))
        return [pair for prefix, module in groups for pair in module.named_parameters(prefix)]

    def encode(self, images: np.ndarray) -> EncodedSequence:
        return self.base(to_nchw(images))

    def losses(
        self,
        images: np.ndarray,
        identities: Sequence[int],
        sequences: Sequence[Sequence[int]],
        objective: JointLossConfig,
    ) -> StreamLosses:
        """One shared forward pass, then the enabled stream losses.

        Args:
            images: (B, H, W, 3) standardized images.
            identities: Identity-head class index per image.
            sequences: Attribute label sequence per image.
            objective: Which streams are enabled.
        """
        with _stream("base"):
            encoded = self.encode(images)
        with _stream("id"):
            l_id = id_loss(id_logits(encoded, self.id_head), np.asarray(identities))
        l_ctc = None
        if objective.use_ctc:
            with _stream("ctc"):
                l_ctc = ctc_loss_batch(ctc_projection(encoded, self.ctc_head), sequences)
        l_at = None
        if objective.use_attention:
            decoder_input, target = self.teacher_forcing_batch(sequences)
            with _stream("attention"):
                memory = self.decoder.encode_memory(encoded.x)
                logits = decode_teacher_forced(self.decoder, memory, decoder_input)
                l_at = attribute_loss(logits, target, self.table.output_class_mask())
        return StreamLosses(l_id, l_ctc, l_at)

    def teacher_forcing_batch(self, sequences: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray]:
        """Vocabulary-index decoder inputs and targets, (B, max_len) each."""
        pairs = [prepare_decoder_io(y, self.cfg.decoder.max_len, self.table) for y in sequences]
        inputs = np.stack([self.table.decoder_indices(inp) for inp, _ in pairs])
        targets = np.stack([target for _, target in pairs])
        return inputs, targets

    def ctc_posteriors(self, images: np.ndarray) -> np.ndarray:
        """(B, T, K+1) posterior matrices."""
        logits = ctc_projection(self.encode(images), self.ctc_head).values
        shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
        return shifted / shifted.sum(axis=-1, keepdims=True)

    def decode_attributes(self, image: np.ndarray, width: Optional[int] = None) -> BeamHypothesis:
        """Beam-search decode of one standardized image."""
        width = width if width is not None else self.cfg.decoder.beam_width
        encoded = self.encode(image)
        memory = self.decoder.encode_memory(encoded.x)
        return beam_search(self.decoder, memory, self.table, width)

    def decode_greedy(self, image: np.ndarray) -> BeamHypothesis:
        memory = self.decoder.encode_memory(self.encode(image).x)
        return greedy_decode(self.decoder, memory, self.table)

    def reid_features(self, images: np.ndarray, layer_choice: str = "conv") -> np.ndarray:
        return extract_reid_features(images, self.base, self.id_head, layer_choice)


def save_model(
    path: Union[str, Path], network: JointNetwork, adam: Optional[AdamState] = None
) -> Path:
    """Write parameters, optimizer state and the identity count."""
    tensors: Dict[str, np.ndarray] = dict(network.state_dict())
    if adam is not None:
        tensors.update(adam.to_tensors())
    tensors["meta/num_identities"] = np.array([float(network.num_identities)])
    return save_checkpoint(path, tensors)


def load_model(
    path: Union[str, Path], cfg: AppConfig, table: MappingTable
) -> Tuple[JointNetwork, AdamState]:
    """Rebuild a network from a checkpoint written by :func:`save_model`.

    Raises:
        CheckpointVersionError: If any tensor shape differs from what ``cfg`` and
            ``table`` describe.
    """
    tensors = load_checkpoint(path)
    if "meta/num_identities" not in tensors:
        raise CheckpointVersionError("checkpoint lacks meta/num_identities", path=str(path))
    num_identities = int(tensors["meta/num_identities"][0])
    network = JointNetwork(cfg, table, num_identities)
    try:
        network.load_state_dict(tensors)
    except CheckpointVersionError as exc:
        exc.details["path"] = str(path)
        raise
    adam = AdamState.from_tensors(tensors, lr=cfg.train.lr)
    return network, adam
