"""Plain-text tables and CSV files for evaluation and ablation reports."""

import csv
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ..metrics import AttributeEvalReport, RankingResult
from ..utils import format_metric


def _cell(value: Any) -> str:
    if value is None or isinstance(value, float):
        return format_metric(value)
    return str(value)


def format_table(rows: Sequence[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> str:
    """Left-aligned text table with a header rule.

    Args:
        rows: One mapping per row.
        columns: Column order; defaults to the first row's keys.

    Returns:
        The table, one line per row, without a trailing newline.
    """
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())
    cells = [[_cell(row.get(col)) for col in columns] for row in rows]
    widths = [max(len(col), *(len(r[i]) for r in cells)) for i, col in enumerate(columns)]
    lines = ["  ".join(col.ljust(w) for col, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in cells)
    return "\n".join(line.rstrip() for line in lines)


def write_csv(
    rows: Sequence[Dict[str, Any]], path: Union[str, Path], columns: Optional[Sequence[str]] = None
) -> Path:
    """Write rows as CSV; missing values are left empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns or (rows[0].keys() if rows else []))
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return path


def attribute_rows(report: AttributeEvalReport) -> List[Dict[str, Any]]:
    rows: List[Dict[str, Any]] = [
        {"group": group, "accuracy": acc, "missing": report.missing.get(group, 0)}
        for group, acc in report.accuracies.items()
    ]
    rows.append({"group": "mA", "accuracy": report.mean_accuracy, "missing": None})
    return rows


def reid_rows(result: RankingResult) -> List[Dict[str, Any]]:
    return [{"metric": name, "value": value} for name, value in result.summary().items()]


def evaluation_rows(
    attributes: Optional[AttributeEvalReport], ranking: Optional[RankingResult]
) -> List[Dict[str, Any]]:
    """``group,accuracy`` rows: one per group, then the mA, rank1 and mAP summary rows."""
    rows: List[Dict[str, Any]] = []
    if attributes is not None:
        rows.extend({"group": group, "accuracy": acc} for group, acc in attributes.accuracies.items())
        rows.append({"group": "mA", "accuracy": attributes.mean_accuracy})
    if ranking is not None:
        rows.append({"group": "rank1", "accuracy": ranking.rank1})
        rows.append({"group": "mAP", "accuracy": ranking.mean_ap})
    return rows


def format_evaluation(
    attributes: Optional[AttributeEvalReport], ranking: Optional[RankingResult]
) -> str:
    """Both evaluation branches as text blocks."""
    blocks = []
    if attributes is not None:
        blocks.append(f"Attributes ({attributes.samples} images)\n" + format_table(attribute_rows(attributes)))
    if ranking is not None:
        blocks.append("Re-identification\n" + format_table(reid_rows(ranking)))
    return "\n\n".join(blocks)
