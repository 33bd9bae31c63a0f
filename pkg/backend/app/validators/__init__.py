"""Input and parameter validation for the seqattr backend.

This package checks configuration sections, image files and named options
before processing begins, and returns clear error messages for invalid inputs.

Modules:
    image_validator: Validates image files and array shapes
    parameter_validator: Validates configuration sections
    format_validator: Validates enumerated option names

Example:
    ```python
    from app.validators import validate_app_config, validate_image_file

    is_valid, error = validate_image_file("data/train/00001_00.simg")
    if not is_valid:
        print(f"Invalid image: {error}")

    is_valid, error = validate_app_config(AppConfig.desk())
    ```
"""

from .image_validator import (
    validate_image_file,
    check_file_format,
    check_simg_header,
    validate_image_shape,
    validate_path,
)
from .parameter_validator import (
    validate_app_config,
    validate_encoder_config,
    validate_decoder_config,
    validate_objective_config,
    validate_train_config,
    validate_data_settings,
)
from .format_validator import (
    get_supported_targets,
    is_valid_target,
    validate_rnn_cell,
    validate_decay_schedule,
    validate_layer_choice,
    validate_ablation_kind,
)

__all__ = [
    # Image validation
    "validate_image_file",
    "check_file_format",
    "check_simg_header",
    "validate_image_shape",
    "validate_path",
    # Parameter validation
    "validate_app_config",
    "validate_encoder_config",
    "validate_decoder_config",
    "validate_objective_config",
    "validate_train_config",
    "validate_data_settings",
    # Option validation
    "get_supported_targets",
    "is_valid_target",
    "validate_rnn_cell",
    "validate_decay_schedule",
    "validate_layer_choice",
    "validate_ablation_kind",
]
