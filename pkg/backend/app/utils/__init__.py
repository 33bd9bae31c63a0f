"""General utility helpers.

This package provides common utility functions for file operations, run
provenance and string formatting.
"""

from .file_utils import (
    library_versions,
    list_images,
    provenance_record,
    read_json,
    sha256_file,
    write_json,
    write_run_record,
)
from .string_utils import format_duration, format_metric, slugify

__all__ = [
    "library_versions",
    "list_images",
    "provenance_record",
    "read_json",
    "sha256_file",
    "write_json",
    "write_run_record",
    "format_duration",
    "format_metric",
    "slugify",
]
