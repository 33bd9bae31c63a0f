"""File system utility functions.

Provides hashing, JSON files and run provenance records.
"""

import hashlib
import json
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy

from ..config.constants import IMAGE_SUFFIX, RUN_RECORD_FILE


def sha256_file(path: Union[str, Path]) -> str:
    """Hex digest of a file's bytes.

    Args:
        path: File to hash.

    Returns:
        Lowercase hexadecimal SHA-256.
    """
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return p


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def list_images(directory: Union[str, Path], recursive: bool = False) -> List[Path]:
    """List SIMG files in a directory, sorted by path.

    Args:
        directory: Directory to search.
        recursive: Whether to search subdirectories.

    Returns:
        List of Path objects.
    """
    p = Path(directory)
    if not p.is_dir():
        return []
    pattern = "**/*" if recursive else "*"
    return sorted(f for f in p.glob(pattern) if f.is_file() and f.suffix.lower() == IMAGE_SUFFIX)


def library_versions() -> Dict[str, str]:
    from .. import __version__

    return {
        "seqattr": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def provenance_record(
    command: str,
    argv: Sequence[str],
    config: Dict[str, Any],
    seed: int,
    outputs: Optional[Dict[str, str]] = None,
) -> Dict[str, Any]:
    """Everything needed to rerun ``command``: arguments, config, seed, versions.

    Args:
        command: Subcommand name.
        argv: Full argument vector the command was invoked with.
        config: Config snapshot (see ``config_snapshot``).
        seed: Effective seed.
        outputs: Produced files, name → path.
    """
    return {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "versions": library_versions(),
        "outputs": dict(outputs or {}),
        "finished_at": datetime.now(timezone.utc).replace(tzinfo=None).isoformat() + "Z",
    }


def write_run_record(out_dir: Union[str, Path], record: Dict[str, Any]) -> Path:
    return write_json(Path(out_dir) / RUN_RECORD_FILE, record)
