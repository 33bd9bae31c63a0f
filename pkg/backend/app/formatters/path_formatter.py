"""Output file naming for converted images."""

import itertools
import re
from pathlib import Path
from typing import Optional

# NUL plus characters rejected by Windows or POSIX file systems
_UNSAFE = re.compile(r'[\0<>:"/\\|?*]')


def sanitize_filename(filename: str) -> str:
    """Replace unsafe characters with ``_``; trims dots and spaces at both ends."""
    cleaned = _UNSAFE.sub(lambda m: "" if m.group() == "\0" else "_", filename).strip(". ")
    return cleaned or "unnamed_file"


def ensure_unique_path(base_path: Path) -> Path:
    """``base_path`` if free, else the first free ``<stem>_<n><suffix>`` (n = 1, 2, ...)."""
    if not base_path.exists():
        return base_path
    for counter in itertools.count(1):
        candidate = base_path.with_name(f"{base_path.stem}_{counter}{base_path.suffix}")
        if not candidate.exists():
            return candidate
    raise AssertionError("unreachable")


def generate_output_path(
    input_path: str,
    output_dir: Optional[str],
    output_format: Optional[str] = None,
    overwrite: bool = False,
) -> Path:
    """Absolute destination for converting ``input_path`` to ``output_format``.

    The destination lives in ``output_dir`` (the source's directory when None)
    and is never the source itself. Unless ``overwrite`` is set, an existing
    file is not reused.
    """
    source = Path(input_path)
    extension = f".{output_format.lstrip('.')}" if output_format else source.suffix
    target = Path(output_dir) if output_dir else source.parent
    destination = target / sanitize_filename(source.stem + extension)

    if destination.resolve() == source.resolve():
        destination = destination.with_name(f"{destination.stem}_converted{destination.suffix}")
    if not overwrite:
        destination = ensure_unique_path(destination)
    return destination.absolute()
