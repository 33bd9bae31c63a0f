"""Image format conversion between SIMG and standard formats.

This module handles batch conversion of SIMG images to PNG (for viewing) and of
PNG/JPEG/BMP images to SIMG (for decoding), reporting progress per file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Set, Tuple

import numpy as np
from PIL import Image

from ..config.constants import IMAGE_SUFFIX
from ..data import read_simg, write_simg
from ..exceptions import ImageFormatError, ParameterError
from ..formatters import generate_output_path
from ..validators import get_supported_targets, is_valid_target, validate_image_file


@dataclass(frozen=True)
class ConversionRequest:
    """Data container describing a batch conversion job.

    Attributes:
        input_paths: List of paths to source images.
        output_directory: Directory where converted files will be saved; each
            source's own directory when None.
        output_format: Target extension, ``png`` or ``simg``.
        overwrite_existing: Whether to overwrite files if they already exist.
    """

    input_paths: Sequence[Path]
    output_directory: Optional[Path]
    output_format: str
    overwrite_existing: bool = False

    def outputs(self) -> Iterable[Tuple[Path, Path]]:
        """Yield tuples of ``(input_path, output_path)`` for the batch.

        Destinations are never the source file, and never collide within one
        batch even when ``overwrite_existing`` is False.
        """
        allocated: Set[Path] = set()
        for source in self.input_paths:
            destination = generate_output_path(
                str(source),
                str(self.output_directory) if self.output_directory else None,
                self.output_format,
                overwrite=self.overwrite_existing,
            )
            index = 1
            base = destination
            while destination in allocated:
                destination = base.with_name(f"{base.stem} ({index}){base.suffix}")
                index += 1
            allocated.add(destination)
            yield Path(source), destination


@dataclass(frozen=True)
class ConversionResult:
    """Outcome returned by :meth:`ImageConverter.convert`."""

    success: bool
    message: str
    outputs: Tuple[Path, ...] = ()


@dataclass(frozen=True)
class ConversionProgress:
    """Progress payload for individual files."""

    status: str
    index: int
    total: int
    source: Path
    destination: Path


def load_any(path: Path) -> np.ndarray:
    """Read a SIMG or a Pillow-readable image as uint8 H×W×3."""
    if path.suffix.lower() == IMAGE_SUFFIX:
        return read_simg(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise ImageFormatError(f"could not decode image: {exc}", path=str(path))


def save_as(image: np.ndarray, path: Path, output_format: str) -> Path:
    if output_format == "simg":
        return write_simg(path, image)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = image[:, :, 0] if image.shape[2] == 1 else image
    Image.fromarray(pixels).save(path, format="PNG")
    return path


class ImageConverter:
    """Convert images between SIMG and PNG with Pillow."""

    @staticmethod
    def available_formats() -> Iterable[str]:
        return get_supported_targets()

    @staticmethod
    def convert(
        request: ConversionRequest,
        progress_callback: Optional[Callable[[ConversionProgress], None]] = None,
    ) -> ConversionResult:
        """Run the conversion and return a structured result.

        Raises:
            ParameterError: For an unsupported target format.
            ImageFormatError: For a missing or undecodable source image.
        """
        output_format = request.output_format.lower().lstrip(".")
        if not is_valid_target(output_format):
            raise ParameterError(
                f"Unsupported target format: {request.output_format}. "
                f"Supported: {', '.join(get_supported_targets())}",
                param_name="format",
            )
        for source in request.input_paths:
            valid, error = validate_image_file(source)
            if not valid:
                raise ImageFormatError(error, path=str(source))

        converted = []
        pairs = list(request.outputs())
        for index, (source, destination) in enumerate(pairs, start=1):
            if progress_callback:
                progress_callback(ConversionProgress("processing", index, len(pairs), source, destination))
            save_as(load_any(source), destination, output_format)
            converted.append(destination)
            if progress_callback:
                progress_callback(ConversionProgress("completed", index, len(pairs), source, destination))

        if len(converted) == 1:
            message = f"Saved file to {converted[0]}"
        else:
            message = f"Converted {len(converted)} files"
        return ConversionResult(True, message, tuple(converted))
