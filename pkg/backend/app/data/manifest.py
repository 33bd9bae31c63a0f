"""Dataset manifests: CSV listing of image, person id, camera and attributes.

Header ``image,pid,camera,<group>...``; image paths are relative to the manifest's
directory. An empty attribute cell leaves that group unassigned for the row.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..codec import AttributeRecord, MappingTable
from ..config.constants import MANIFEST_FIXED_COLUMNS
from ..exceptions import IngestionError


@dataclass(frozen=True)
class ManifestRow:
    path: Path
    pid: int
    camera: int
    attributes: Dict[str, str] = field(default_factory=dict)

    def record(self) -> AttributeRecord:
        return AttributeRecord(dict(self.attributes), pid=self.pid)


@dataclass
class DatasetManifest:
    """Ordered rows of one split; ``groups`` are the attribute columns."""

    rows: List[ManifestRow]
    groups: Tuple[str, ...]
    split: str = "train"

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def pids(self) -> List[int]:
        return sorted({row.pid for row in self.rows})

    def cameras(self) -> List[int]:
        return sorted({row.camera for row in self.rows})

    def records(self) -> List[AttributeRecord]:
        return [row.record() for row in self.rows]

    def subset(self, pids: Iterable[int], split: Optional[str] = None) -> "DatasetManifest":
        keep = set(pids)
        rows = [row for row in self.rows if row.pid in keep]
        return DatasetManifest(rows, self.groups, split or self.split)


def write_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    """Write ``manifest`` as CSV with image paths relative to ``path``'s directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(MANIFEST_FIXED_COLUMNS) + list(manifest.groups))
        for row in manifest.rows:
            image = Path(os.path.relpath(row.path.resolve(), base)).as_posix()
            values = [row.attributes.get(group, "") for group in manifest.groups]
            writer.writerow([image, row.pid, row.camera] + values)
    return path


def _parse_int(text: str, path: str, line: int, column: str, minimum: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise IngestionError(f"{column} '{text}' is not an integer", path=path, row=line, column=column)
    if value < minimum:
        raise IngestionError(f"{column} must be >= {minimum}, got {value}", path=path, row=line, column=column)
    return value


def load_manifest(
    path: Union[str, Path],
    table: MappingTable,
    split: Optional[str] = None,
    check_images: bool = True,
) -> DatasetManifest:
    """Parse and validate a manifest against ``table``.

    Row numbers in errors are 1-based file lines, the header being line 1.

    Raises:
        IngestionError: On a malformed header, an unknown group or value, a bad
            pid or camera, or (with ``check_images``) a missing image file.
    """
    path = Path(path)
    where = str(path)
    if not path.is_file():
        raise IngestionError("manifest does not exist", path=where)

    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError("manifest is empty", path=where, row=1)
        fixed = len(MANIFEST_FIXED_COLUMNS)
        if tuple(header[:fixed]) != MANIFEST_FIXED_COLUMNS:
            raise IngestionError(
                f"header must start with {','.join(MANIFEST_FIXED_COLUMNS)}", path=where, row=1
            )
        groups = tuple(header[fixed:])
        known = set(table.group_names)
        for group in groups:
            if group not in known:
                raise IngestionError(f"unknown attribute group '{group}'", path=where, row=1, column=group)

        rows: List[ManifestRow] = []
        for line, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise IngestionError(
                    f"expected {len(header)} columns, found {len(cells)}", path=where, row=line
                )
            image = path.parent / cells[0]
            if check_images and not image.is_file():
                raise IngestionError(f"image '{cells[0]}' not found", path=where, row=line, column="image")
            pid = _parse_int(cells[1], where, line, "pid", minimum=1)
            camera = _parse_int(cells[2], where, line, "camera", minimum=0)
            attributes: Dict[str, str] = {}
            for group, value in zip(groups, cells[fixed:]):
                if value == "":
                    continue
                if value not in table.group(group).values:
                    raise IngestionError(
                        f"unknown value '{value}' for group '{group}'", path=where, row=line, column=group
                    )
                attributes[group] = value
            rows.append(ManifestRow(image, pid, camera, attributes))

    return DatasetManifest(rows, groups, split or path.stem)


def merge_manifests(manifests: Sequence[DatasetManifest], split: Optional[str] = None) -> DatasetManifest:
    """Concatenate rows; attribute columns are the union in first-seen order."""
    if not manifests:
        raise IngestionError("nothing to merge")
    groups: List[str] = []
    for manifest in manifests:
        groups.extend(g for g in manifest.groups if g not in groups)
    rows = [row for manifest in manifests for row in manifest.rows]
    return DatasetManifest(rows, tuple(groups), split or manifests[0].split)


def split_validation(
    manifest: DatasetManifest, fraction: float, seed: int
) -> Tuple[DatasetManifest, DatasetManifest]:
    """Carve ``fraction`` of the identities (not images) into a validation split.

    At least one identity is held out when ``fraction`` > 0 and at least one is
    always kept for training.
    """
    pids = manifest.pids()
    count = int(round(fraction * len(pids)))
    if fraction > 0 and count == 0 and len(pids) > 1:
        count = 1
    count = min(count, max(len(pids) - 1, 0))
    rng = np.random.default_rng(seed)
    held = {pids[i] for i in rng.permutation(len(pids))[:count]}
    train = manifest.subset([p for p in pids if p not in held], split=manifest.split)
    validation = manifest.subset(held, split="validation")
    return train, validation
