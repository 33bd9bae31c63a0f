"""Synthetic dataset generation handler."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

from ..codec import MappingTable
from ..config.settings import DataSettings, EncoderConfig
from ..data import GeneratedDataset, SyntheticSpec, generate_dataset


@dataclass(frozen=True)
class GenerationRequest:
    """Data container describing one generation job.

    Attributes:
        settings: ``[data]`` section of the config.
        output_directory: Dataset root; receives images, manifests and sidecars.
        encoder: Supplies the image size so generated data fits the model.
        overrides: Extra :class:`SyntheticSpec` fields (e.g. a second nuisance
            regime for hybrid training).
    """

    settings: DataSettings
    output_directory: Path
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    overrides: Dict[str, object] = field(default_factory=dict)

    def spec(self) -> SyntheticSpec:
        spec = SyntheticSpec.from_settings(
            self.settings, height=self.encoder.input_h, width=self.encoder.input_w, **self.overrides
        )
        if self.settings.table:
            spec.table = MappingTable.load(self.settings.table)
        return spec


@dataclass(frozen=True)
class GenerationResult:
    success: bool
    message: str
    dataset: Optional[GeneratedDataset] = None
    outputs: Tuple[Path, ...] = ()


class DatasetGenerator:
    """Render a synthetic dataset to disk."""

    @staticmethod
    def process(
        request: GenerationRequest, log_callback: Optional[Callable[[str], None]] = None
    ) -> GenerationResult:
        spec = request.spec()
        spec.validate()
        if log_callback:
            log_callback(
                f"rendering {spec.total_identities} identities × {spec.images_per_identity} images "
                f"at {spec.height}×{spec.width} (seed={spec.seed})"
            )
        dataset = generate_dataset(spec, request.output_directory)
        if log_callback:
            log_callback(f"wrote {len(dataset.train)} train and {len(dataset.test)} test images")
        return GenerationResult(
            success=True,
            message=f"Generated {len(dataset.train) + len(dataset.test)} images",
            dataset=dataset,
            outputs=(dataset.train_path, dataset.test_path, dataset.table_path, dataset.stats_path),
        )
