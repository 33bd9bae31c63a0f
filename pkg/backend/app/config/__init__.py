"""Application configuration and constants.

This package centralizes all configuration settings and constants used
throughout the backend application.
"""

from .settings import (
    AppConfig,
    DataSettings,
    EncoderConfig,
    JointLossConfig,
    TrainConfig,
    TransformerConfig,
)
from .constants import (
    CTC_BLANK,
    DECODER_PAD,
    DEFAULT_START_SYMBOL,
    EXIT_CODES,
)
from .loader import (
    apply_setting,
    config_from_snapshot,
    config_snapshot,
    dump_config,
    load_config,
    parse_override,
)

__all__ = [
    "AppConfig",
    "DataSettings",
    "EncoderConfig",
    "JointLossConfig",
    "TrainConfig",
    "TransformerConfig",
    "CTC_BLANK",
    "DECODER_PAD",
    "DEFAULT_START_SYMBOL",
    "EXIT_CODES",
    "apply_setting",
    "config_from_snapshot",
    "config_snapshot",
    "dump_config",
    "load_config",
    "parse_override",
]
