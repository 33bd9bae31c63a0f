"""Ablation harness: train and evaluate a family of variants, one CSV row each.

Every variant shares the base config's seed. Variants that change the label
space (dropped or reordered groups) get their own table and manifests inside
their run directory, so each run is self-contained and rerunnable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..codec import MappingTable
from ..config.constants import ABLATION_KINDS, CHANNEL_STATS_FILE, LAMBDA_SWEEP, TABLE_FILE
from ..config.settings import AppConfig
from ..data import (
    ChannelStats,
    DatasetManifest,
    SyntheticSpec,
    generate_dataset,
    load_images,
    load_manifest,
    merge_manifests,
    write_manifest,
)
from ..exceptions import UsageError
from ..formatters import write_csv
from ..metrics import RetrievalProtocol
from ..utils import slugify
from .evaluator import EvaluationRequest, Evaluator
from .trainer import JointTrainer, TrainRequest

LogCallback = Callable[[str], None]

METRIC_COLUMNS = ("mA", "rank1", "rank5", "rank10", "mAP")

# Second nuisance regime of the hybrid-training study.
HYBRID_BRIGHTNESS = 0.75
HYBRID_NOISE_FACTOR = 1.5


@dataclass(frozen=True)
class DatasetFiles:
    """A generated dataset directory: manifests plus sidecars."""

    train: Path
    test: Path
    table: Path
    stats: Path

    @classmethod
    def in_directory(cls, root: Path) -> "DatasetFiles":
        root = Path(root)
        return cls(root / "train.csv", root / "test.csv", root / TABLE_FILE, root / CHANNEL_STATS_FILE)


@dataclass(frozen=True)
class AblationRequest:
    """Data container describing one ablation study.

    Attributes:
        kind: One of ``ABLATION_KINDS``.
        config: Base config every variant starts from.
        data: The dataset the variants train and test on.
        output_directory: One subdirectory per variant plus ``<kind>.csv``.
        permutations: Seeded group orders tried by ``order_permutation``.
    """

    kind: str
    config: AppConfig
    data: DatasetFiles
    output_directory: Path
    permutations: int = 3


@dataclass(frozen=True)
class AblationResult:
    success: bool
    message: str
    rows: Tuple[Dict[str, Any], ...] = ()
    columns: Tuple[str, ...] = ()
    csv_path: Optional[Path] = None


@dataclass
class Variant:
    """One training run and how to score it."""

    name: str
    config: AppConfig
    data: DatasetFiles
    labels: Dict[str, Any] = field(default_factory=dict)
    hold_out_validation: bool = False
    layer_choices: Tuple[str, ...] = ("conv",)
    score_attributes: bool = True


def _run_variant(variant: Variant, out_dir: Path, log_callback: Optional[LogCallback]) -> List[Dict[str, Any]]:
    """Train ``variant`` and return one metric row per requested feature layer."""
    run_dir = out_dir / slugify(variant.name)
    trained = JointTrainer.process(
        TrainRequest(
            config=variant.config,
            train_manifest=variant.data.train,
            table_path=variant.data.table,
            output_directory=run_dir,
            stats_path=variant.data.stats,
            hold_out_validation=variant.hold_out_validation,
        ),
        log_callback,
    )
    test_manifest = trained.validation_manifest or variant.data.test
    rows = []
    for i, layer in enumerate(variant.layer_choices):
        evaluated = Evaluator.process(
            EvaluationRequest(
                config=variant.config,
                checkpoint=trained.checkpoint,
                test_manifest=test_manifest,
                table_path=variant.data.table,
                stats_path=variant.data.stats,
                output_directory=run_dir / f"eval-{layer}",
                layer_choice=layer,
                protocol=RetrievalProtocol(),
                attributes=variant.score_attributes and i == 0,
            ),
            log_callback,
        )
        summary = evaluated.summary()
        row: Dict[str, Any] = {"variant": variant.name, **variant.labels}
        if len(variant.layer_choices) > 1:
            row["layer"] = layer
        row["mA"] = summary.get("mA")
        for column in ("rank1", "rank5", "rank10", "mAP"):
            row[column] = summary.get(column)
        rows.append(row)
    return rows


def _with_objective(cfg: AppConfig, **changes) -> AppConfig:
    return replace(cfg, objective=replace(cfg.objective, **changes))


def _relabelled_dataset(
    data: DatasetFiles, table: MappingTable, target: Path
) -> DatasetFiles:
    """Copy manifests restricted to ``table``'s groups, plus the table itself."""
    target.mkdir(parents=True, exist_ok=True)
    source_table = MappingTable.load(data.table)
    paths = {}
    for split, path in (("train", data.train), ("test", data.test)):
        manifest = load_manifest(path, source_table, split=split)
        rows = [
            replace(row, attributes={g: v for g, v in row.attributes.items() if g in table.group_names})
            for row in manifest.rows
        ]
        paths[split] = write_manifest(DatasetManifest(rows, table.group_names, split), target / f"{split}.csv")
    table_path = table.dump(target / TABLE_FILE)
    return DatasetFiles(paths["train"], paths["test"], table_path, data.stats)


def lambda_sweep(request: AblationRequest) -> List[Variant]:
    return [
        Variant(
            f"lambda={value:g}",
            _with_objective(request.config, lambda_id=value),
            request.data,
            labels={"lambda": value},
            hold_out_validation=True,
        )
        for value in LAMBDA_SWEEP
    ]


def joint_vs_separate(request: AblationRequest) -> List[Variant]:
    cfg = request.config
    return [
        Variant("full", cfg, request.data, labels={"arm": "joint"}),
        Variant("without re-id", _with_objective(cfg, lambda_id=0.0), request.data, labels={"arm": "attributes only"}),
        Variant(
            "without attributes",
            _with_objective(cfg, use_ctc=False, use_attention=False),
            request.data,
            labels={"arm": "identity only"},
            score_attributes=False,
        ),
    ]


def feature_layer(request: AblationRequest) -> List[Variant]:
    return [Variant("full", request.config, request.data, layer_choices=("conv", "fc0"))]


def drop_attribute(request: AblationRequest) -> List[Variant]:
    table = MappingTable.load(request.data.table)
    variants = []
    for name in table.group_names:
        reduced = table.without_group(name)
        data = _relabelled_dataset(request.data, reduced, request.output_directory / "tables" / slugify(f"without-{name}"))
        variants.append(Variant(f"without {name}", request.config, data, labels={"dropped": name}))
    return variants


def order_permutation(request: AblationRequest) -> List[Variant]:
    table = MappingTable.load(request.data.table)
    rng = np.random.default_rng(request.config.train.seed)
    orders = [tuple(table.group_names)]
    for _ in range(request.permutations):
        orders.append(tuple(table.group_names[i] for i in rng.permutation(len(table.group_names))))
    variants = []
    for i, order in enumerate(orders):
        name = "original order" if i == 0 else f"permutation {i}"
        data = _relabelled_dataset(request.data, table.reordered(order), request.output_directory / "tables" / slugify(name))
        variants.append(Variant(name, request.config, data, labels={"order": " ".join(order)}))
    return variants


def second_regime(request: AblationRequest, log_callback: Optional[LogCallback]) -> Tuple[DatasetFiles, DatasetFiles]:
    """Render the darker, noisier regime and the merged (hybrid) training split.

    Returns ``(second regime alone, hybrid)``; both test on the second regime.
    """
    settings = request.config.data
    table = MappingTable.load(request.data.table)
    first_train = load_manifest(request.data.train, table)
    first_pids = first_train.pids() + load_manifest(request.data.test, table).pids()
    enc = request.config.encoder
    spec = SyntheticSpec.from_settings(
        settings,
        height=enc.input_h,
        width=enc.input_w,
        seed=settings.seed + 1,
        brightness_center=HYBRID_BRIGHTNESS,
        noise_std=settings.noise_std * HYBRID_NOISE_FACTOR,
        pid_offset=max(first_pids),
    )
    spec.table = table
    if log_callback:
        log_callback(f"rendering second regime ({spec.total_identities} identities)")
    regime_dir = request.output_directory / "regime-b"
    generated = generate_dataset(spec, regime_dir)
    second = DatasetFiles(generated.train_path, generated.test_path, generated.table_path, generated.stats_path)

    hybrid_dir = request.output_directory / "hybrid-data"
    merged = merge_manifests([first_train, generated.train], split="train")
    train_path = write_manifest(merged, hybrid_dir / "train.csv")
    stats_path = ChannelStats.from_images(load_images(merged)).save(hybrid_dir / CHANNEL_STATS_FILE)
    hybrid = DatasetFiles(train_path, generated.test_path, generated.table_path, stats_path)
    return second, hybrid


def hybrid_training(request: AblationRequest, log_callback: Optional[LogCallback] = None) -> List[Variant]:
    second, hybrid = second_regime(request, log_callback)
    return [
        Variant("independent", request.config, second, labels={"training": "second regime only"}),
        Variant("hybrid", request.config, hybrid, labels={"training": "both regimes merged"}),
    ]


class AblationRunner:
    """Run one ablation kind and write its comparison CSV."""

    @staticmethod
    def variants(request: AblationRequest, log_callback: Optional[LogCallback] = None) -> List[Variant]:
        """The variant set of ``request.kind``.

        Raises:
            UsageError: For an unknown kind.
        """
        builders = {
            "lambda_sweep": lambda: lambda_sweep(request),
            "joint_vs_separate": lambda: joint_vs_separate(request),
            "feature_layer": lambda: feature_layer(request),
            "drop_attribute": lambda: drop_attribute(request),
            "order_permutation": lambda: order_permutation(request),
            "hybrid_training": lambda: hybrid_training(request, log_callback),
        }
        if request.kind not in builders:
            raise UsageError(
                f"Unknown ablation kind: {request.kind}",
                details={"valid": list(ABLATION_KINDS)},
            )
        return builders[request.kind]()

    @staticmethod
    def process(request: AblationRequest, log_callback: Optional[LogCallback] = None) -> AblationResult:
        out = Path(request.output_directory)
        out.mkdir(parents=True, exist_ok=True)
        variants = AblationRunner.variants(request, log_callback)
        rows: List[Dict[str, Any]] = []
        for index, variant in enumerate(variants, start=1):
            if log_callback:
                log_callback(f"variant {index}/{len(variants)}: {variant.name}")
            rows.extend(_run_variant(variant, out, log_callback))

        columns: List[str] = []
        for row in rows:
            columns.extend(key for key in row if key not in columns and key not in METRIC_COLUMNS)
        columns.extend(METRIC_COLUMNS)
        csv_path = write_csv(rows, out / f"{request.kind}.csv", columns)
        return AblationResult(
            success=True,
            message=f"{request.kind}: {len(rows)} rows",
            rows=tuple(rows),
            columns=tuple(columns),
            csv_path=csv_path,
        )
