"""Image file validation utilities.

This module checks image paths before they are read: existence, a supported
extension, the SIMG header, and array shapes against the encoder input size.
"""

from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..config.constants import IMAGE_MAGIC, IMAGE_SUFFIX

# Constants
CONVERTIBLE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}
SUPPORTED_EXTENSIONS = {IMAGE_SUFFIX} | CONVERTIBLE_EXTENSIONS


def validate_path(path_str: str) -> Tuple[bool, Optional[str]]:
    """Validate that a path string is well-formed and exists.

    Args:
        path_str: The file system path to validate.

    Returns:
        Tuple[bool, Optional[str]]: (True, None) if valid, (False, error_message) if invalid.
    """
    if not path_str:
        return False, "Path cannot be empty"

    try:
        path = Path(path_str)
        if not path.exists():
            return False, f"Path does not exist: {path_str}"
        return True, None
    except Exception as e:
        return False, f"Invalid path format: {str(e)}"


def check_file_format(file_path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
    """Check if the file has a supported image extension.

    Args:
        file_path: Path to the image file.

    Returns:
        Tuple[bool, Optional[str]]: (True, None) if supported, (False, error_message) if not.
    """
    suffix = Path(file_path).suffix.lower()
    if suffix not in SUPPORTED_EXTENSIONS:
        return False, f"Unsupported file format: {suffix}. Supported: {', '.join(sorted(SUPPORTED_EXTENSIONS))}"
    return True, None


def check_simg_header(file_path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
    """Check that a file starts with the SIMG magic."""
    try:
        with open(file_path, "rb") as handle:
            head = handle.read(len(IMAGE_MAGIC))
    except OSError as e:
        return False, f"Could not read image: {str(e)}"
    if head != IMAGE_MAGIC:
        return False, f"Not a SIMG image: {file_path}"
    return True, None


def validate_image_shape(image: np.ndarray, expected_hw: Sequence[int]) -> Tuple[bool, Optional[str]]:
    """Validate an H×W×3 image against the encoder input size."""
    if image.ndim != 3 or image.shape[2] != 3:
        return False, f"Image must be H×W×3, got shape {tuple(image.shape)}"
    if tuple(image.shape[:2]) != tuple(expected_hw):
        return False, f"Image is {image.shape[0]}×{image.shape[1]}, model expects {expected_hw[0]}×{expected_hw[1]}"
    return True, None


def validate_image_file(file_path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
    """Comprehensive validation of a SIMG file: existence, extension and header."""
    exists, error = validate_path(str(file_path))
    if not exists:
        return False, error

    valid_format, error = check_file_format(file_path)
    if not valid_format:
        return False, error

    if Path(file_path).suffix.lower() == IMAGE_SUFFIX:
        return check_simg_header(file_path)
    return True, None
