"""Base model and identity head.

The convolutional trunk follows the bottleneck-stage layout of a ResNet-50
with every stage striding the height only, so a W-wide input becomes a W/4-long
sequence once the final pooling collapses the height. Two bidirectional
recurrent layers turn that sequence into the T × D features ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..config.constants import REID_LAYERS
from ..config.settings import EncoderConfig
from ..exceptions import ConfigError
from ..numkit import Conv2d, Linear, Module, Tensor, ops
from .recurrent import BiRecurrent

# Residual branches end in a down-scaled conv so each block starts near identity.
RESIDUAL_INIT_SCALE = 0.1


class Bottleneck(Module):
    """1×1 reduce → 3×3 → 1×1 expand (×4), with a projection shortcut when needed."""

    def __init__(self, in_channels: int, width: int, stride: Tuple[int, int], rng: np.random.Generator):
        out_channels = 4 * width
        self.reduce = Conv2d(in_channels, width, 1, rng, stride=stride, bias=True)
        self.spatial = Conv2d(width, width, 3, rng, padding=1, bias=True)
        self.expand = Conv2d(width, out_channels, 1, rng, bias=True, init_scale=RESIDUAL_INIT_SCALE)
        needs_projection = stride != (1, 1) or in_channels != out_channels
        self.shortcut: Optional[Conv2d] = (
            Conv2d(in_channels, out_channels, 1, rng, stride=stride, bias=True)
            if needs_projection
            else None
        )

    def __call__(self, x: Tensor) -> Tensor:
        out = ops.relu(self.reduce(x))
        out = ops.relu(self.spatial(out))
        out = self.expand(out)
        skip = self.shortcut(x) if self.shortcut is not None else x
        return ops.relu(ops.add(out, skip))


@dataclass
class EncodedSequence:
    """Base-model output for a batch.

    Attributes:
        x: (B, T, D) recurrent features feeding CTC and the decoder.
        conv: (B, T, C) convolutional sequence feeding the identity head.
    """

    x: Tensor
    conv: Tensor

    @property
    def timesteps(self) -> int:
        return self.x.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.x.shape[2]


class BaseModel(Module):
    """Convolutional trunk plus two bidirectional recurrent layers."""

    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.stem = Conv2d(3, cfg.stem_width, 7, rng, stride=2, padding=3, bias=True)
        self.blocks: List[Bottleneck] = []
        in_channels = cfg.stem_width
        for width, count in zip(cfg.stage_widths, cfg.blocks_per_stage):
            for i in range(count):
                stride = (2, 1) if i == 0 else (1, 1)
                self.blocks.append(Bottleneck(in_channels, width, stride, rng))
                in_channels = 4 * width
        self.rnn_1 = BiRecurrent(cfg.conv_channels, cfg.rnn_hidden_1, cfg.rnn_cell, rng)
        self.rnn_2 = BiRecurrent(2 * cfg.rnn_hidden_1, cfg.rnn_hidden_2, cfg.rnn_cell, rng)

    def conv_sequence(self, images: Tensor) -> Tensor:
        """(B, 3, H, W) → (B, T, C) width-indexed convolutional features."""
        out = ops.relu(self.stem(images))
        out = ops.max_pool2d(out, 3, stride=2, padding=1)
        for block in self.blocks:
            out = block(out)
        height = out.shape[2]
        out = ops.max_pool2d(out, (EncoderConfig.final_pool_height(height), 1), stride=(3, 1))
        batch, channels, _, width = out.shape
        return ops.transpose(ops.reshape(out, (batch, channels, width)), (0, 2, 1))

    def __call__(self, images: Tensor) -> EncodedSequence:
        conv = self.conv_sequence(images)
        x = self.rnn_2(self.rnn_1(conv))
        return EncodedSequence(x=x, conv=conv)


class IdHead(Module):
    """FC0 → ReLU → FC1 over the flattened convolutional sequence."""

    def __init__(self, conv_dim: int, fc0_dim: int, num_identities: int, rng: np.random.Generator):
        self.fc0 = Linear(conv_dim, fc0_dim, rng)
        self.fc1 = Linear(fc0_dim, num_identities, rng)
        self.num_identities = num_identities

    def features(self, conv: Tensor) -> Tensor:
        """The fc0 output ``c`` (before the rectifier)."""
        flat = ops.reshape(conv, (conv.shape[0], -1))
        if flat.shape[1] != self.fc0.in_features:
            raise ConfigError(
                f"identity head expects {self.fc0.in_features} conv features, got {flat.shape[1]}",
                details={"expected": self.fc0.in_features, "found": flat.shape[1]},
            )
        return self.fc0(flat)

    def __call__(self, conv: Tensor) -> Tensor:
        return self.fc1(ops.relu(self.features(conv)))


def to_nchw(images: np.ndarray) -> Tensor:
    """(B, H, W, 3) or (H, W, 3) float images → (B, 3, H, W) tensor."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 3:
        images = images[None]
    return Tensor(np.ascontiguousarray(images.transpose(0, 3, 1, 2)))


def encode_image(image: np.ndarray, cfg: EncoderConfig, model: BaseModel) -> EncodedSequence:
    """Encode one standardized H × W × 3 image; ``x`` comes back as (1, T, D).

    Raises:
        ConfigError: If the image size differs from ``cfg``.
    """
    image = np.asarray(image)
    if image.shape != (cfg.input_h, cfg.input_w, 3):
        raise ConfigError(
            f"image shape {image.shape} does not match the encoder input "
            f"({cfg.input_h}, {cfg.input_w}, 3)",
            key="encoder.input_h",
        )
    return model(to_nchw(image))


def id_logits(encoded: EncodedSequence, head: IdHead) -> Tensor:
    """Identity logits ``z`` for every item of the batch."""
    return head(encoded.conv)


def id_loss(z: Tensor, identity) -> Tensor:
    """Mean identity cross-entropy; ``identity`` is an index per row of ``z``."""
    return ops.cross_entropy(z, identity)


def ctc_projection(encoded: EncodedSequence, layer: Linear) -> Tensor:
    """Per-timestep (K+1)-way logits; softmax of each row gives the posterior matrix."""
    if encoded.feature_dim != layer.in_features:
        raise ConfigError(
            f"CTC projection expects D={layer.in_features}, got {encoded.feature_dim}",
            details={"expected": layer.in_features, "found": encoded.feature_dim},
        )
    return layer(encoded.x)


def reid_feature_dim(cfg: EncoderConfig, layer_choice: str) -> int:
    if layer_choice == "conv":
        return cfg.conv_feature_dim()
    if layer_choice == "fc0":
        return cfg.fc0_dim
    raise ConfigError(f"unknown feature layer '{layer_choice}'", key="layer")


def extract_reid_features(
    images: np.ndarray, model: BaseModel, head: IdHead, layer_choice: str = "conv"
) -> np.ndarray:
    """L2-normalized re-ID vectors for a batch of standardized images.

    ``conv`` returns the flattened convolutional sequence (T × C values per image);
    ``fc0`` returns the identity head's first-layer output.

    Raises:
        ConfigError: For an unknown layer choice.
    """
    if layer_choice not in REID_LAYERS:
        raise ConfigError(f"unknown feature layer '{layer_choice}'", key="layer")
    conv = model.conv_sequence(to_nchw(images))
    if layer_choice == "conv":
        features = conv.values.reshape(conv.shape[0], -1)
    else:
        features = head.features(conv).values
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    return features / np.maximum(norms, 1e-12)
