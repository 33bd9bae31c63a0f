"""Application settings classes.

This module defines configuration classes for different aspects of the application.
Using classes allows for type safety and easy grouping of related settings.
Every class has a desk-scale default and a ``full()`` constructor holding the
full-size values.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple


@dataclass
class EncoderConfig:
    """Convolutional trunk, bidirectional recurrent layers and identity head."""

    # Input image size (height, width)
    input_h: int = 56
    input_w: int = 28

    # Channel multiplier applied to the stem and every stage
    scale: float = 0.25

    # Bottleneck blocks in conv2_x .. conv5_x
    blocks_per_stage: Tuple[int, ...] = (1, 1, 1, 1)

    # Unscaled stem width and per-stage bottleneck widths (stage output is 4x)
    stem_channels: int = 64
    base_widths: Tuple[int, ...] = (64, 128, 256, 512)

    # Hidden size per direction of the two recurrent layers
    rnn_hidden_1: int = 64
    rnn_hidden_2: int = 32

    # "gru" or "tanh"
    rnn_cell: str = "gru"

    # Width of the identity head's first layer (the fc0 re-ID feature)
    fc0_dim: int = 128

    @classmethod
    def desk(cls) -> "EncoderConfig":
        return cls()

    @classmethod
    def full(cls) -> "EncoderConfig":
        return cls(
            input_h=224,
            input_w=112,
            scale=1.0,
            blocks_per_stage=(3, 4, 6, 3),
            rnn_hidden_1=1024,
            rnn_hidden_2=512,
            fc0_dim=1024,
        )

    def scaled(self, width: int) -> int:
        return max(1, int(round(width * self.scale)))

    @property
    def stem_width(self) -> int:
        return self.scaled(self.stem_channels)

    @property
    def stage_widths(self) -> Tuple[int, ...]:
        return tuple(self.scaled(width) for width in self.base_widths)

    @property
    def conv_channels(self) -> int:
        """Channels of the final convolutional stage."""
        return 4 * self.stage_widths[-1]

    @property
    def sequence_length(self) -> int:
        """T: one stride-2 conv and one stride-2 pool act on the width."""
        return self.input_w // 4

    @property
    def feature_dim(self) -> int:
        """D: bidirectional concatenation of the last recurrent layer."""
        return 2 * self.rnn_hidden_2

    def layer_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Output shape of every base-model row, computed without weights.

        Convolutional rows are (C, H, W); recurrent rows are (T, features).
        """
        h, w = self.input_h, self.input_w
        shapes: Dict[str, Tuple[int, ...]] = {}
        h, w = (h - 1) // 2 + 1, (w - 1) // 2 + 1
        shapes["conv_1"] = (self.stem_width, h, w)
        h, w = (h - 1) // 2 + 1, (w - 1) // 2 + 1
        shapes["pool_1"] = (self.stem_width, h, w)
        for stage, width in enumerate(self.stage_widths, start=2):
            h = (h - 1) // 2 + 1
            shapes[f"conv_{stage}"] = (4 * width, h, w)
        h = (h - self.final_pool_height(h)) // 3 + 1
        shapes["pool_2"] = (self.conv_channels, h, w)
        shapes["rnn_1"] = (w, 2 * self.rnn_hidden_1)
        shapes["rnn_2"] = (w, 2 * self.rnn_hidden_2)
        return shapes

    @staticmethod
    def final_pool_height(height: int) -> int:
        return min(3, height)

    def conv_feature_dim(self) -> int:
        """Length of the flattened convolutional sequence (T × channels)."""
        return self.sequence_length * self.conv_channels


@dataclass
class TransformerConfig:
    """Attention decoder settings."""

    layers: int = 2
    heads: int = 4
    d_model: int = 64
    ffn_dim: int = 128

    # Decoder positions, including the shifted start symbol
    max_len: int = 8
    beam_width: int = 3

    @classmethod
    def desk(cls) -> "TransformerConfig":
        return cls()

    @classmethod
    def full(cls) -> "TransformerConfig":
        return cls(layers=6, heads=8, d_model=1024, ffn_dim=4096, max_len=28)


@dataclass
class JointLossConfig:
    """Weights and switches of the three-term objective."""

    # Weight on the identity loss
    lambda_id: float = 4.0
    use_ctc: bool = True
    use_attention: bool = True


@dataclass
class TrainConfig:
    """Optimisation loop settings."""

    epochs: int = 30
    batch_size: int = 16
    lr: float = 1e-4

    # Multiplicative learning-rate decay and when it applies ("epoch" or "step")
    decay: float = 0.9
    decay_every: str = "epoch"

    seed: int = 7
    flip_probability: float = 0.5

    # Fraction of training identities held out for model selection
    validation_fraction: float = 0.1

    # Epochs between progress lines
    log_every: int = 1

    # Optional checkpoint to initialise from
    warm_start: Optional[str] = None

    @classmethod
    def desk(cls) -> "TrainConfig":
        return cls()

    @classmethod
    def full(cls) -> "TrainConfig":
        return cls(epochs=200, batch_size=64)


@dataclass
class DataSettings:
    """Synthetic dataset generation and lookup."""

    # Mapping table file; the built-in six-group table when unset
    table: Optional[str] = None
    root: str = "data"

    identities: int = 200
    test_identities: int = 200
    images_per_identity: int = 20
    cameras: int = 2
    seed: int = 7

    # Distinct textures available per attribute combination
    texture_capacity: int = 16

    # Per-image nuisance
    noise_std: float = 6.0
    max_shift: int = 2


@dataclass
class AppConfig:
    """Global application settings."""

    APP_NAME: str = "seqattr"
    VERSION: str = "0.1.0"

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    decoder: TransformerConfig = field(default_factory=TransformerConfig)
    objective: JointLossConfig = field(default_factory=JointLossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataSettings = field(default_factory=DataSettings)

    @classmethod
    def desk(cls) -> "AppConfig":
        return cls()

    @classmethod
    def full(cls) -> "AppConfig":
        return cls(
            encoder=EncoderConfig.full(),
            decoder=TransformerConfig.full(),
            train=TrainConfig.full(),
        )

    def with_objective(self, **changes) -> "AppConfig":
        return replace(self, objective=replace(self.objective, **changes))

    def with_train(self, **changes) -> "AppConfig":
        return replace(self, train=replace(self.train, **changes))
