"""Single-image attribute decoding."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from ..codec import AttributeRecord, MappingTable, decode_sequence
from ..config.constants import CHANNEL_STATS_FILE, TABLE_FILE
from ..config.settings import AppConfig
from ..data import ChannelStats, read_simg, standardize
from ..exceptions import ImageFormatError
from ..model import load_model
from ..validators import validate_image_file, validate_image_shape


@dataclass(frozen=True)
class DecodeRequest:
    """Data container describing one decode.

    Attributes:
        config: Config the checkpoint was trained with.
        checkpoint: Trained checkpoint.
        image: SIMG image to decode.
        table_path: Defaults to the table stored next to the checkpoint.
        stats_path: Defaults to the statistics stored next to the checkpoint.
        beam_width: Overrides ``decoder.beam_width``.
        greedy: Decode greedily instead of with the beam.
    """

    config: AppConfig
    checkpoint: Path
    image: Path
    table_path: Optional[Path] = None
    stats_path: Optional[Path] = None
    beam_width: Optional[int] = None
    greedy: bool = False

    def resolved_table_path(self) -> Path:
        return self.table_path or Path(self.checkpoint).parent / TABLE_FILE

    def resolved_stats_path(self) -> Path:
        return self.stats_path or Path(self.checkpoint).parent / CHANNEL_STATS_FILE


@dataclass(frozen=True)
class DecodeResult:
    success: bool
    message: str
    record: Optional[AttributeRecord] = None
    labels: Tuple[int, ...] = ()
    log_prob: float = 0.0


def decode_image(request: DecodeRequest) -> DecodeResult:
    """Decode the attribute record of one image.

    Raises:
        ImageFormatError: If the image is missing, not SIMG, or the wrong size.
    """
    valid, error = validate_image_file(request.image)
    if not valid:
        raise ImageFormatError(error, path=str(request.image))
    if Path(request.image).suffix.lower() != ".simg":
        raise ImageFormatError("decode reads SIMG images; convert other formats first", path=str(request.image))
    image = read_simg(request.image)
    enc = request.config.encoder
    valid, error = validate_image_shape(image, (enc.input_h, enc.input_w))
    if not valid:
        raise ImageFormatError(error, path=str(request.image))

    table = MappingTable.load(request.resolved_table_path())
    stats = ChannelStats.load(request.resolved_stats_path())
    network, _ = load_model(request.checkpoint, request.config, table)
    standardized = standardize(image, stats)
    if request.greedy:
        hyp = network.decode_greedy(standardized)
    else:
        hyp = network.decode_attributes(standardized, request.beam_width)
    record = decode_sequence(hyp.labels, table)
    return DecodeResult(
        success=True,
        message=f"Decoded {len(record.attributes)} attribute groups",
        record=record,
        labels=tuple(hyp.labels),
        log_prob=hyp.log_prob,
    )
