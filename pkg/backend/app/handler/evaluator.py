"""Checkpoint evaluation: attribute recognition and re-identification.

The attribute branch beam-decodes every test image and scores the decoded
records; the re-ID branch uses the first image of each identity as its query
and ranks every remaining test image. Evaluation never writes to the checkpoint
or the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..codec import AttributeRecord, MappingTable, decode_sequence
from ..config.constants import CHANNEL_STATS_FILE, EVALUATION_COLUMNS, EVALUATION_FILE
from ..config.settings import AppConfig
from ..data import ChannelStats, DatasetManifest, load_images, load_manifest, standardize
from ..formatters import evaluation_rows, write_csv
from ..metrics import (
    AttributeEvalReport,
    RankingResult,
    RetrievalProtocol,
    attribute_accuracy,
    chance_level,
    cmc_map,
)
from ..model import JointNetwork, beam_search, load_model
from ..numkit import Tensor

LogCallback = Callable[[str], None]


@dataclass(frozen=True)
class EvaluationRequest:
    """Data container describing one evaluation.

    Attributes:
        config: Config the checkpoint was trained with.
        checkpoint: Checkpoint written by the trainer.
        test_manifest: Split to evaluate.
        table_path: Mapping table file.
        stats_path: Channel statistics of the training split; defaults to the
            sidecar next to the manifest.
        output_directory: Receives ``evaluation.csv`` when given.
        layer_choice: Re-ID feature layer, ``conv`` or ``fc0``.
        protocol: Gallery filtering rules.
        beam_width: Overrides ``decoder.beam_width``.
        attributes: Run the attribute branch.
        reid: Run the re-identification branch.
    """

    config: AppConfig
    checkpoint: Path
    test_manifest: Path
    table_path: Path
    stats_path: Optional[Path] = None
    output_directory: Optional[Path] = None
    layer_choice: str = "conv"
    protocol: RetrievalProtocol = field(default_factory=RetrievalProtocol)
    beam_width: Optional[int] = None
    attributes: bool = True
    reid: bool = True

    def resolved_stats_path(self) -> Path:
        return self.stats_path or Path(self.test_manifest).parent / CHANNEL_STATS_FILE


@dataclass(frozen=True)
class EvaluationResult:
    """Outcome returned by :meth:`Evaluator.process`."""

    success: bool
    message: str
    attributes: Optional[AttributeEvalReport] = None
    ranking: Optional[RankingResult] = None
    chance: float = 0.0
    outputs: Tuple[Path, ...] = ()

    def summary(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        if self.attributes is not None:
            out["mA"] = self.attributes.mean_accuracy
            out["chance_mA"] = self.chance
            out.update({f"acc_{g}": a for g, a in self.attributes.accuracies.items()})
        if self.ranking is not None:
            out.update(self.ranking.summary())
        return out


def query_gallery_split(manifest: DatasetManifest) -> Tuple[np.ndarray, np.ndarray]:
    """Row indices of queries (first image per identity) and of the gallery (the rest)."""
    seen = set()
    queries: List[int] = []
    gallery: List[int] = []
    for i, row in enumerate(manifest.rows):
        if row.pid in seen:
            gallery.append(i)
        else:
            seen.add(row.pid)
            queries.append(i)
    return np.array(queries, dtype=np.intp), np.array(gallery, dtype=np.intp)


def decode_records(
    network: JointNetwork,
    images: np.ndarray,
    width: int,
    chunk: int,
) -> List[AttributeRecord]:
    """Beam-decode standardized images; the base model runs once per chunk."""
    records: List[AttributeRecord] = []
    for start in range(0, len(images), chunk):
        encoded = network.encode(images[start : start + chunk])
        memory = network.decoder.encode_memory(encoded.x).values
        for offset in range(memory.shape[0]):
            hyp = beam_search(network.decoder, Tensor(memory[offset : offset + 1]), network.table, width)
            records.append(decode_sequence(hyp.labels, network.table))
    return records


def reid_features(network: JointNetwork, images: np.ndarray, layer_choice: str, chunk: int) -> np.ndarray:
    parts = [
        network.reid_features(images[start : start + chunk], layer_choice)
        for start in range(0, len(images), chunk)
    ]
    return np.concatenate(parts, axis=0)


def evaluate_network(
    network: JointNetwork,
    manifest: DatasetManifest,
    images: np.ndarray,
    table: MappingTable,
    request: EvaluationRequest,
) -> Tuple[Optional[AttributeEvalReport], Optional[RankingResult]]:
    """Score an in-memory network on standardized ``images`` of ``manifest``."""
    chunk = max(request.config.train.batch_size, 1)
    attributes = None
    ranking = None
    if request.attributes:
        width = request.beam_width or request.config.decoder.beam_width
        predictions = decode_records(network, images, width, chunk)
        truths = [AttributeRecord(dict(row.attributes)) for row in manifest.rows]
        attributes = attribute_accuracy(predictions, truths, table)
    if request.reid:
        queries, gallery = query_gallery_split(manifest)
        features = reid_features(network, images, request.layer_choice, chunk)
        pids = np.array([row.pid for row in manifest.rows])
        cameras = np.array([row.camera for row in manifest.rows])
        ranking = cmc_map(
            features[queries],
            features[gallery],
            pids[queries],
            pids[gallery],
            protocol=request.protocol,
            query_cameras=cameras[queries],
            gallery_cameras=cameras[gallery],
        )
    return attributes, ranking


class Evaluator:
    """Load a checkpoint and produce the combined report."""

    @staticmethod
    def process(request: EvaluationRequest, log_callback: Optional[LogCallback] = None) -> EvaluationResult:
        """Run both branches and return a structured result.

        Raises:
            CheckpointVersionError: If the checkpoint does not fit ``request.config``.
        """
        table = MappingTable.load(request.table_path)
        network, _ = load_model(request.checkpoint, request.config, table)
        manifest = load_manifest(request.test_manifest, table, split="test")
        stats = ChannelStats.load(request.resolved_stats_path())
        images = standardize(load_images(manifest), stats)
        if log_callback:
            log_callback(f"evaluating {len(manifest)} images of {len(manifest.pids())} identities")

        attributes, ranking = evaluate_network(network, manifest, images, table, request)
        outputs: List[Path] = []
        if request.output_directory is not None:
            rows = evaluation_rows(attributes, ranking)
            outputs.append(write_csv(rows, Path(request.output_directory) / EVALUATION_FILE, EVALUATION_COLUMNS))
        result = EvaluationResult(
            success=True,
            message="Evaluation complete",
            attributes=attributes,
            ranking=ranking,
            chance=chance_level(table),
            outputs=tuple(outputs),
        )
        if log_callback:
            log_callback(", ".join(f"{k}={v:.4f}" for k, v in result.summary().items()))
        return result
