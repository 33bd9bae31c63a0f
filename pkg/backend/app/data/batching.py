"""Image loading, channel standardization and mini-batch assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..codec import MappingTable, encode_record
from ..exceptions import DataError, ImageFormatError
from .augment import FlipAugmenter
from .image_io import read_simg
from .manifest import DatasetManifest


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and std of training pixels scaled to [0, 1]."""

    mean: Tuple[float, ...]
    std: Tuple[float, ...]

    @classmethod
    def from_images(cls, images: Iterable[np.ndarray]) -> "ChannelStats":
        total = None
        total_sq = None
        count = 0
        for image in images:
            pixels = image.reshape(-1, image.shape[-1]).astype(np.float64) / 255.0
            if total is None:
                total = np.zeros(pixels.shape[1])
                total_sq = np.zeros(pixels.shape[1])
            total += pixels.sum(axis=0)
            total_sq += (pixels ** 2).sum(axis=0)
            count += pixels.shape[0]
        if not count:
            raise DataError("cannot compute channel statistics without images")
        mean = total / count
        std = np.sqrt(np.maximum(total_sq / count - mean ** 2, 1e-12))
        return cls(tuple(float(m) for m in mean), tuple(float(s) for s in std))

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"mean": list(self.mean), "std": list(self.std)}, indent=2))
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ChannelStats":
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
            return cls(tuple(payload["mean"]), tuple(payload["std"]))
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"unreadable channel statistics: {exc}", path=str(path))


def standardize(images: np.ndarray, stats: ChannelStats) -> np.ndarray:
    """uint8 (…, H, W, C) → float64 zero-mean unit-std per channel."""
    scaled = np.asarray(images, dtype=np.float64) / 255.0
    return (scaled - np.asarray(stats.mean)) / np.asarray(stats.std)


def load_images(manifest: DatasetManifest) -> np.ndarray:
    """Stack every manifest image into one (N, H, W, C) uint8 array."""
    images = [read_simg(row.path) for row in manifest.rows]
    if not images:
        raise DataError(f"manifest split '{manifest.split}' has no rows")
    shapes = {image.shape for image in images}
    if len(shapes) != 1:
        raise ImageFormatError(f"images differ in shape: {sorted(shapes)}")
    return np.stack(images)


def identity_index(pids: Sequence[int]) -> Dict[int, int]:
    """Identity-head class per pid: position in the sorted distinct pids."""
    return {pid: i for i, pid in enumerate(sorted(set(pids)))}


@dataclass
class Batch:
    images: np.ndarray
    identities: np.ndarray
    sequences: List[Tuple[int, ...]]
    rows: np.ndarray


class TrainingSet:
    """Decoded images, identity classes and label sequences of a training split."""

    def __init__(self, manifest: DatasetManifest, table: MappingTable, stats: ChannelStats):
        self.manifest = manifest
        self.table = table
        self.stats = stats
        self.images = load_images(manifest)
        self.id_index = identity_index(manifest.pids())
        self.identities = np.array([self.id_index[row.pid] for row in manifest.rows], dtype=np.int64)
        self.sequences = [tuple(encode_record(row.record(), table)) for row in manifest.rows]

    def __len__(self) -> int:
        return len(self.manifest)

    @property
    def num_identities(self) -> int:
        return len(self.id_index)

    def sample_path(self, row: int) -> str:
        return str(self.manifest.rows[row].path)

    def batches(
        self,
        batch_size: int,
        rng: np.random.Generator,
        augmenter: Optional[FlipAugmenter] = None,
    ) -> Iterator[Batch]:
        """One shuffled epoch; the last batch may be short."""
        order = rng.permutation(len(self))
        for start in range(0, order.size, batch_size):
            rows = order[start : start + batch_size]
            images = self.images[rows]
            if augmenter is not None:
                images = augmenter.apply_batch(images)
            yield Batch(
                images=standardize(images, self.stats),
                identities=self.identities[rows],
                sequences=[self.sequences[i] for i in rows],
                rows=rows,
            )
