"""Enumerated option validation utilities.

This module validates the named choices accepted by configuration keys and
commands: recurrent cell types, decay schedules, re-ID feature layers,
ablation kinds and conversion targets.
"""

from typing import List, Optional, Tuple

from ..config.constants import ABLATION_KINDS, REID_LAYERS

# Constants
RNN_CELLS = ["gru", "tanh"]
DECAY_SCHEDULES = ["epoch", "step"]
CONVERSION_TARGETS = ["png", "simg"]


def get_supported_targets() -> List[str]:
    """Get list of supported conversion targets.

    Returns:
        List[str]: List of format extensions.
    """
    return sorted(CONVERSION_TARGETS)


def is_valid_target(fmt: str) -> bool:
    return fmt.lower().strip(".") in CONVERSION_TARGETS


def validate_rnn_cell(cell: str) -> Tuple[bool, Optional[str]]:
    if cell not in RNN_CELLS:
        return False, f"Unsupported rnn_cell: {cell}. Valid: {RNN_CELLS}"
    return True, None


def validate_decay_schedule(schedule: str) -> Tuple[bool, Optional[str]]:
    if schedule not in DECAY_SCHEDULES:
        return False, f"Invalid decay_every: {schedule}. Valid: {DECAY_SCHEDULES}"
    return True, None


def validate_layer_choice(layer: str) -> Tuple[bool, Optional[str]]:
    """Validate a re-ID feature layer name.

    Args:
        layer: "conv" or "fc0".

    Returns:
        Tuple[bool, Optional[str]]: (True, None) if valid.
    """
    if layer not in REID_LAYERS:
        return False, f"Unknown feature layer: {layer}. Valid: {list(REID_LAYERS)}"
    return True, None


def validate_ablation_kind(kind: str) -> Tuple[bool, Optional[str]]:
    if kind not in ABLATION_KINDS:
        return False, f"Unknown ablation kind: {kind}. Valid: {list(ABLATION_KINDS)}"
    return True, None
