"""Configuration parameter validation utilities.

This module validates the typed settings sections before any work starts.
Every validator returns an ``(is_valid, error_message)`` tuple and never raises.
"""

from typing import Optional, Tuple

from ..config.settings import (
    AppConfig,
    DataSettings,
    EncoderConfig,
    JointLossConfig,
    TrainConfig,
    TransformerConfig,
)
from .format_validator import validate_decay_schedule, validate_rnn_cell


def _positive(name: str, value) -> Tuple[bool, Optional[str]]:
    if value <= 0:
        return False, f"{name} must be positive, got {value}"
    return True, None


def validate_encoder_config(cfg: EncoderConfig) -> Tuple[bool, Optional[str]]:
    """Validate the encoder section.

    Args:
        cfg: Encoder settings.

    Returns:
        Tuple[bool, Optional[str]]: (True, None) if valid.
    """
    for name in ("input_h", "input_w", "scale", "stem_channels", "rnn_hidden_1", "rnn_hidden_2", "fc0_dim"):
        valid, error = _positive(name, getattr(cfg, name))
        if not valid:
            return False, error

    if len(cfg.blocks_per_stage) != 4 or len(cfg.base_widths) != 4:
        return False, "blocks_per_stage and base_widths need one entry per stage (4)"
    if min(cfg.blocks_per_stage) < 1 or min(cfg.base_widths) < 1:
        return False, "every stage needs at least one block and a positive width"

    # Width law T = W / 4
    if cfg.input_w % 4 != 0:
        return False, f"input_w must be a multiple of 4, got {cfg.input_w}"

    final_height = cfg.layer_shapes()["pool_2"][1]
    if final_height != 1:
        return False, f"input_h={cfg.input_h} leaves height {final_height} after the final pooling"

    return validate_rnn_cell(cfg.rnn_cell)


def validate_decoder_config(cfg: TransformerConfig) -> Tuple[bool, Optional[str]]:
    for name in ("layers", "heads", "d_model", "ffn_dim", "max_len", "beam_width"):
        valid, error = _positive(name, getattr(cfg, name))
        if not valid:
            return False, error
    if cfg.d_model % cfg.heads != 0:
        return False, f"d_model ({cfg.d_model}) must be divisible by heads ({cfg.heads})"
    if cfg.max_len < 2:
        return False, "max_len must leave room for at least one label"
    return True, None


def validate_objective_config(cfg: JointLossConfig) -> Tuple[bool, Optional[str]]:
    if cfg.lambda_id < 0:
        return False, f"lambda must be nonnegative, got {cfg.lambda_id}"
    if cfg.lambda_id == 0 and not (cfg.use_ctc or cfg.use_attention):
        return False, "at least one loss stream must be enabled"
    return True, None


def validate_train_config(cfg: TrainConfig) -> Tuple[bool, Optional[str]]:
    for name in ("epochs", "batch_size", "lr", "log_every"):
        valid, error = _positive(name, getattr(cfg, name))
        if not valid:
            return False, error

    if not (0 < cfg.decay <= 1):
        return False, f"decay must lie in (0, 1], got {cfg.decay}"
    if not (0 <= cfg.flip_probability <= 1):
        return False, "flip_probability must lie in [0, 1]"
    if not (0 <= cfg.validation_fraction < 1):
        return False, "validation_fraction must lie in [0, 1)"

    return validate_decay_schedule(cfg.decay_every)


def validate_data_settings(cfg: DataSettings) -> Tuple[bool, Optional[str]]:
    for name in ("identities", "test_identities", "images_per_identity", "cameras", "texture_capacity"):
        valid, error = _positive(name, getattr(cfg, name))
        if not valid:
            return False, error
    if cfg.noise_std < 0 or cfg.max_shift < 0:
        return False, "noise_std and max_shift must be nonnegative"
    return True, None


def validate_app_config(cfg: AppConfig) -> Tuple[bool, Optional[str]]:
    """Validate every section, reporting the first failure with its section name."""
    checks = (
        ("encoder", validate_encoder_config, cfg.encoder),
        ("decoder", validate_decoder_config, cfg.decoder),
        ("train", validate_objective_config, cfg.objective),
        ("train", validate_train_config, cfg.train),
        ("data", validate_data_settings, cfg.data),
    )
    for section, check, value in checks:
        valid, error = check(value)
        if not valid:
            return False, f"[{section}] {error}"
    return True, None
