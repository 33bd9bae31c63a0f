"""Response, report and path formatting utilities.

This package provides standardized formatting for command responses (JSON
output), evaluation/ablation reports and file system paths.

Modules:
    output_formatter: Formats JSON responses for stdout
    report_formatter: Text tables and CSV files for metrics
    path_formatter: Handles file naming and path sanitization
"""

from .output_formatter import (
    format_success,
    format_error,
)
from .report_formatter import (
    attribute_rows,
    evaluation_rows,
    format_evaluation,
    format_table,
    reid_rows,
    write_csv,
)
from .path_formatter import (
    sanitize_filename,
    generate_output_path,
    ensure_unique_path
)

__all__ = [
    "format_success",
    "format_error",
    "attribute_rows",
    "evaluation_rows",
    "format_evaluation",
    "format_table",
    "reid_rows",
    "write_csv",
    "sanitize_filename",
    "generate_output_path",
    "ensure_unique_path",
]
