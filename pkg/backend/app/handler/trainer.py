"""Joint training loop.

Each batch runs one forward pass of the base model, computes the enabled stream
losses, combines them into the joint objective and applies one Adam update.
Every step appends a row to the loss log; the learning rate decays per epoch
(or per step) as ``lr0 · decay^n``.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..codec import MappingTable
from ..config.constants import CHANNEL_STATS_FILE, LOSS_LOG_COLUMNS, LOSS_LOG_FILE, TABLE_FILE
from ..config.settings import AppConfig
from ..ctc import required_steps
from ..data import (
    ChannelStats,
    DatasetManifest,
    FlipAugmenter,
    TrainingSet,
    load_manifest,
    split_validation,
    write_manifest,
)
from ..exceptions import CheckpointVersionError, DataError, TrainingStepError
from ..model import JointNetwork, LossBreakdown, breakdown, joint_loss, save_model
from ..numkit import AdamState, Tape, adam_step, backward, load_checkpoint
from ..utils import format_duration

LogCallback = Callable[[str], None]


@dataclass(frozen=True)
class TrainRequest:
    """Data container describing one training run.

    Attributes:
        config: Full application config; ``train`` and ``objective`` drive the loop.
        train_manifest: Manifest of the training split.
        table_path: Mapping table file.
        output_directory: Receives the checkpoint, the loss log and (optionally)
            the carved validation manifest.
        stats_path: Channel statistics; defaults to the sidecar next to the manifest.
        hold_out_validation: Carve ``train.validation_fraction`` of the identities
            into ``validation.csv`` and train on the rest.
        checkpoint_name: File name of the written checkpoint.
    """

    config: AppConfig
    train_manifest: Path
    table_path: Path
    output_directory: Path
    stats_path: Optional[Path] = None
    hold_out_validation: bool = False
    checkpoint_name: str = "model.ckpt"

    def resolved_stats_path(self) -> Path:
        return self.stats_path or Path(self.train_manifest).parent / CHANNEL_STATS_FILE


@dataclass
class EpochSummary:
    epoch: int
    mean_losses: Dict[str, Optional[float]]
    lr: float


@dataclass(frozen=True)
class TrainResult:
    """Outcome returned by :meth:`JointTrainer.process`."""

    success: bool
    message: str
    checkpoint: Optional[Path] = None
    loss_log: Optional[Path] = None
    validation_manifest: Optional[Path] = None
    steps: int = 0
    final: Optional[LossBreakdown] = None
    epochs: Tuple[EpochSummary, ...] = ()
    outputs: Tuple[Path, ...] = field(default=())


def learning_rate(base: float, decay: float, completed: int) -> float:
    """``base · decay^completed`` for completed epochs (or steps)."""
    return base * decay ** completed


def check_alignable(train_set: TrainingSet, timesteps: int) -> None:
    """Every training sequence must fit in ``timesteps`` CTC frames.

    Raises:
        DataError: Naming the first sample whose sequence cannot be aligned.
    """
    for row, sequence in enumerate(train_set.sequences):
        needed = required_steps(sequence)
        if needed > timesteps:
            raise DataError(
                f"label sequence of sample needs {needed} CTC steps, the encoder emits {timesteps}",
                path=train_set.sample_path(row),
                details={"row": row, "required": needed, "timesteps": timesteps},
            )


def warm_start(network: JointNetwork, path: Path) -> int:
    """Copy base-model weights from a checkpoint; returns how many tensors were loaded.

    Raises:
        CheckpointVersionError: If a base tensor's shape differs.
    """
    tensors = load_checkpoint(path)
    base = {name[len("base."):]: value for name, value in tensors.items() if name.startswith("base.")}
    if not base:
        raise CheckpointVersionError("warm-start checkpoint has no base-model tensors", path=str(path))
    network.base.load_state_dict(base, strict=False)
    return len(base)


def _log_value(value: Optional[float]) -> str:
    return "" if value is None else repr(value)


def train_network(
    cfg: AppConfig,
    train_set: TrainingSet,
    table: MappingTable,
    loss_log: Path,
    log_callback: Optional[LogCallback] = None,
) -> Tuple[JointNetwork, AdamState, List[EpochSummary], Optional[LossBreakdown], int]:
    """Run the configured number of epochs over ``train_set``.

    Returns:
        ``(network, optimizer state, epoch summaries, last step's losses, steps)``.

    Raises:
        TrainingStepError: If a stream loss turns non-finite (names the stream).
    """
    train_cfg = cfg.train
    objective = cfg.objective
    network = JointNetwork(cfg, table, train_set.num_identities, seed=train_cfg.seed)
    if train_cfg.warm_start:
        loaded = warm_start(network, Path(train_cfg.warm_start))
        if log_callback:
            log_callback(f"warm start: {loaded} base tensors from {train_cfg.warm_start}")
    check_alignable(train_set, cfg.encoder.sequence_length)

    adam = AdamState(lr=train_cfg.lr)
    shuffle_rng = np.random.default_rng([train_cfg.seed, 1])
    augmenter = FlipAugmenter(train_cfg.flip_probability, seed=train_cfg.seed + 1)
    per_step = train_cfg.decay_every == "step"
    params = network.stream_parameters(objective)

    summaries: List[EpochSummary] = []
    last: Optional[LossBreakdown] = None
    step = 0
    started = time.monotonic()
    loss_log.parent.mkdir(parents=True, exist_ok=True)
    with loss_log.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(LOSS_LOG_COLUMNS)
        for epoch in range(train_cfg.epochs):
            if not per_step:
                adam.lr = learning_rate(train_cfg.lr, train_cfg.decay, epoch)
            sums: Dict[str, List[float]] = {"l_id": [], "l_ctc": [], "l_at": [], "joint": []}
            for batch in train_set.batches(train_cfg.batch_size, shuffle_rng, augmenter):
                if per_step:
                    adam.lr = learning_rate(train_cfg.lr, train_cfg.decay, step)
                with Tape() as tape:
                    try:
                        streams = network.losses(batch.images, batch.identities, batch.sequences, objective)
                    except TrainingStepError as exc:
                        exc.details["step"] = step
                        raise
                    total = joint_loss(streams.l_id, streams.l_ctc, streams.l_at, objective, step=step)
                backward(total, tape)
                adam_step(params, adam)
                step += 1
                last = breakdown(streams.l_id, streams.l_ctc, streams.l_at, total)
                writer.writerow(
                    [step, epoch + 1, _log_value(last.l_id), _log_value(last.l_ctc),
                     _log_value(last.l_at), repr(last.joint), repr(adam.lr)]
                )
                for key in sums:
                    value = getattr(last, key)
                    if value is not None:
                        sums[key].append(value)
            handle.flush()
            means = {k: (float(np.mean(v)) if v else None) for k, v in sums.items()}
            summaries.append(EpochSummary(epoch + 1, means, adam.lr))
            if log_callback and (epoch + 1) % train_cfg.log_every == 0:
                shown = " ".join(f"{k}={v:.4f}" for k, v in means.items() if v is not None)
                log_callback(
                    f"epoch {epoch + 1}/{train_cfg.epochs} {shown} lr={adam.lr:.3e} "
                    f"elapsed={format_duration(time.monotonic() - started)}"
                )
    if not per_step:
        adam.lr = learning_rate(train_cfg.lr, train_cfg.decay, train_cfg.epochs)
    return network, adam, summaries, last, step


class JointTrainer:
    """Train the joint network from manifest files and write its checkpoint."""

    @staticmethod
    def process(request: TrainRequest, log_callback: Optional[LogCallback] = None) -> TrainResult:
        """Run training and return a structured result.

        Data and numeric failures propagate as typed errors so the caller can map
        them to exit codes; nothing partial is reported as success.
        """
        cfg = request.config
        out = Path(request.output_directory)
        out.mkdir(parents=True, exist_ok=True)
        table = MappingTable.load(request.table_path)
        manifest: DatasetManifest = load_manifest(request.train_manifest, table, split="train")
        outputs: List[Path] = []

        validation_path: Optional[Path] = None
        if request.hold_out_validation and cfg.train.validation_fraction > 0:
            manifest, validation = split_validation(
                manifest, cfg.train.validation_fraction, cfg.train.seed
            )
            validation_path = write_manifest(validation, out / "validation.csv")
            outputs.append(validation_path)

        stats = ChannelStats.load(request.resolved_stats_path())
        # checkpoint directories carry their own table and statistics
        if (out / TABLE_FILE).resolve() != Path(request.table_path).resolve():
            outputs.append(table.dump(out / TABLE_FILE))
        if (out / CHANNEL_STATS_FILE).resolve() != request.resolved_stats_path().resolve():
            outputs.append(stats.save(out / CHANNEL_STATS_FILE))
        train_set = TrainingSet(manifest, table, stats)
        if log_callback:
            log_callback(
                f"training on {len(train_set)} images of {train_set.num_identities} identities "
                f"(lambda={cfg.objective.lambda_id}, ctc={cfg.objective.use_ctc}, "
                f"attention={cfg.objective.use_attention})"
            )

        loss_log = out / LOSS_LOG_FILE
        network, adam, summaries, last, steps = train_network(cfg, train_set, table, loss_log, log_callback)
        checkpoint = save_model(out / request.checkpoint_name, network, adam)
        outputs[:0] = [checkpoint, loss_log]
        return TrainResult(
            success=True,
            message=f"Trained {steps} steps over {cfg.train.epochs} epochs",
            checkpoint=checkpoint,
            loss_log=loss_log,
            validation_manifest=validation_path,
            steps=steps,
            final=last,
            epochs=tuple(summaries),
            outputs=tuple(outputs),
        )
