"""Attribute records ⇄ integer label sequences.

The mapping table enumerates every (group, value) pair as a label in 1..K.
Label 0 is the CTC blank on the CTC side and pad/end-of-sequence on the decoder
side; the decoder's start symbol is stored as table metadata.

Typical usage:
    ```python
    table = MappingTable.load("mapping_table.tsv")
    y = encode_record(AttributeRecord({"gender": "male", "hat": "yes"}, pid=3), table)
    decoder_input, decoder_target = prepare_decoder_io(y, max_len=8, table=table)
    ```
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config.constants import CTC_BLANK, DECODER_PAD, DEFAULT_START_SYMBOL, START_ROW_NAME
from .exceptions import CodecError, LengthError, TableFormatError


@dataclass(frozen=True)
class AttributeGroup:
    name: str
    values: Tuple[str, ...]


class MappingTable:
    """Immutable bijection between labels 1..K and (group, value) pairs.

    Attributes:
        groups: Attribute groups in table order (the order labels are emitted).
        start_symbol: Raw decoder start symbol. 100 unless K ≥ 100, in which case
            it is remapped to K + 1.
    """

    def __init__(
        self,
        groups: Sequence[AttributeGroup],
        labels: Mapping[Tuple[str, str], int],
        start_symbol: Optional[int] = None,
    ):
        self.groups: Tuple[AttributeGroup, ...] = tuple(groups)
        self._labels: Dict[Tuple[str, str], int] = dict(labels)
        self._entries: Dict[int, Tuple[str, str]] = {
            label: pair for pair, label in self._labels.items()
        }
        self._group_index = {group.name: i for i, group in enumerate(self.groups)}
        self._validate()
        k = self.num_labels
        if start_symbol is None:
            start_symbol = DEFAULT_START_SYMBOL if k < DEFAULT_START_SYMBOL else k + 1
        if start_symbol in self._entries or start_symbol == DECODER_PAD:
            raise TableFormatError(
                f"start symbol {start_symbol} collides with a label", line=None
            )
        self.start_symbol = int(start_symbol)

    def _validate(self) -> None:
        expected = {(g.name, v) for g in self.groups for v in g.values}
        if set(self._labels) != expected:
            raise TableFormatError("label assignment does not cover the groups exactly")
        if len(self._entries) != len(self._labels):
            raise TableFormatError("two (group, value) pairs share a label")
        if set(self._entries) != set(range(1, len(self._labels) + 1)):
            raise TableFormatError(
                f"labels must be exactly 1..{len(self._labels)}"
            )

    @classmethod
    def from_groups(cls, groups: Iterable[Tuple[str, Sequence[str]]], start_symbol: Optional[int] = None) -> "MappingTable":
        """Build a table labelling values densely in group order."""
        built: List[AttributeGroup] = []
        labels: Dict[Tuple[str, str], int] = {}
        for name, values in groups:
            built.append(AttributeGroup(name, tuple(values)))
            for value in values:
                labels[(name, value)] = len(labels) + 1
        return cls(built, labels, start_symbol)

    # ------------------------------------------------------------------
    # Lookups
    # ------------------------------------------------------------------

    @property
    def num_labels(self) -> int:
        """K, the number of attribute labels."""
        return len(self._labels)

    @property
    def group_names(self) -> Tuple[str, ...]:
        return tuple(group.name for group in self.groups)

    @property
    def vocab_size(self) -> int:
        """Decoder vocabulary: pad/EOS, labels 1..K, start."""
        return self.num_labels + 2

    def group(self, name: str) -> AttributeGroup:
        if name not in self._group_index:
            raise CodecError(f"unknown attribute group '{name}'", group=name)
        return self.groups[self._group_index[name]]

    def group_position(self, name: str) -> int:
        self.group(name)
        return self._group_index[name]

    def label_of(self, group: str, value: str) -> int:
        self.group(group)
        try:
            return self._labels[(group, value)]
        except KeyError:
            raise CodecError(
                f"unknown value '{value}' for group '{group}'", group=group, value=value
            ) from None

    def entry(self, label: int) -> Tuple[str, str]:
        try:
            return self._entries[int(label)]
        except KeyError:
            raise CodecError(f"label {label} is not in 1..{self.num_labels}") from None

    def has_label(self, label: int) -> bool:
        return int(label) in self._entries

    def decoder_index(self, symbol: int) -> int:
        """Vocabulary index of a raw decoder symbol (start → K + 1)."""
        symbol = int(symbol)
        if symbol == self.start_symbol:
            return self.num_labels + 1
        if symbol == DECODER_PAD or symbol in self._entries:
            return symbol
        raise CodecError(f"symbol {symbol} is not in the decoder vocabulary")

    def decoder_indices(self, symbols: Sequence[int]) -> np.ndarray:
        return np.array([self.decoder_index(s) for s in np.ravel(symbols)], dtype=np.int64).reshape(
            np.shape(symbols)
        )

    def output_class_mask(self) -> np.ndarray:
        """Classes the decoder may emit; the start index is excluded."""
        mask = np.ones(self.vocab_size, dtype=bool)
        mask[self.num_labels + 1] = False
        return mask

    # ------------------------------------------------------------------
    # Derived tables
    # ------------------------------------------------------------------

    def without_group(self, name: str) -> "MappingTable":
        self.group(name)
        return MappingTable.from_groups(
            ((g.name, g.values) for g in self.groups if g.name != name)
        )

    def reordered(self, order: Sequence[str]) -> "MappingTable":
        if sorted(order) != sorted(self.group_names):
            raise CodecError("reordering must name every group exactly once")
        return MappingTable.from_groups((name, self.group(name).values) for name in order)

    # ------------------------------------------------------------------
    # File format
    # ------------------------------------------------------------------

    @classmethod
    def loads(cls, text: str, path: Optional[str] = None) -> "MappingTable":
        groups: Dict[str, List[str]] = {}
        labels: Dict[Tuple[str, str], int] = {}
        start_symbol: Optional[int] = None
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TableFormatError(
                    "expected group<TAB>value<TAB>label", path=path, line=line_no
                )
            group, value, label_text = (part.strip() for part in parts)
            try:
                label = int(label_text)
            except ValueError:
                raise TableFormatError(
                    f"label '{label_text}' is not an integer", path=path, line=line_no
                ) from None
            if group == START_ROW_NAME:
                start_symbol = label
                continue
            if (group, value) in labels:
                raise TableFormatError(
                    f"duplicate entry {group}/{value}", path=path, line=line_no
                )
            groups.setdefault(group, []).append(value)
            labels[(group, value)] = label
        if not labels:
            raise TableFormatError("mapping table has no entries", path=path)
        built = [AttributeGroup(name, tuple(values)) for name, values in groups.items()]
        try:
            return cls(built, labels, start_symbol)
        except TableFormatError as exc:
            if path:
                exc.details["path"] = path
            raise

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MappingTable":
        path = Path(path)
        if not path.is_file():
            raise TableFormatError("mapping table file does not exist", path=str(path))
        return cls.loads(path.read_text(encoding="utf-8"), path=str(path))

    def dumps(self) -> str:
        lines = ["# group\tvalue\tlabel"]
        for group in self.groups:
            for value in group.values:
                lines.append(f"{group.name}\t{value}\t{self._labels[(group.name, value)]}")
        lines.append(f"{START_ROW_NAME}\t{START_ROW_NAME}\t{self.start_symbol}")
        return "\n".join(lines) + "\n"

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MappingTable)
            and self.groups == other.groups
            and self._labels == other._labels
            and self.start_symbol == other.start_symbol
        )

    def __repr__(self) -> str:
        return f"MappingTable(groups={list(self.group_names)}, K={self.num_labels})"


def default_table() -> MappingTable:
    """Six-group table used by the synthetic pedestrian generator."""
    return MappingTable.from_groups(
        [
            ("gender", ("male", "female")),
            ("hat", ("no", "yes")),
            ("backpack", ("no", "yes")),
            ("sleeve", ("long", "short")),
            ("up_color", ("red", "green", "blue", "yellow")),
            ("low_color", ("black", "white", "blue", "brown")),
        ]
    )


@dataclass(frozen=True)
class AttributeRecord:
    """Partial group → value assignment for one person."""

    attributes: Mapping[str, str] = field(default_factory=dict)
    pid: Optional[int] = None

    def get(self, group: str) -> Optional[str]:
        return self.attributes.get(group)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, AttributeRecord)
            and dict(self.attributes) == dict(other.attributes)
            and self.pid == other.pid
        )


@dataclass(frozen=True)
class LabelSequence:
    """Attribute labels in emission order, each in 1..K."""

    labels: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(int(label) for label in self.labels))
        if not self.labels:
            raise CodecError("label sequence must contain at least one label")
        if min(self.labels) < 1:
            raise CodecError("labels must be positive; 0 is reserved")

    def __len__(self) -> int:
        return len(self.labels)

    def validate(self, table: MappingTable) -> "LabelSequence":
        """Check the sequence against ``table``; construction alone only checks positivity.

        Returns:
            ``self``, so the call can wrap a constructor.

        Raises:
            LengthError: If there are more labels than groups.
            CodecError: For a label outside 1..K, or two labels of one group, or
                groups out of table order.
        """
        if len(self.labels) > len(table.groups):
            raise LengthError(
                f"{len(self.labels)} labels for {len(table.groups)} groups",
                length=len(self.labels),
                max_len=len(table.groups),
            )
        previous = -1
        for label in self.labels:
            group, _ = table.entry(label)
            position = table.group_position(group)
            if position <= previous:
                raise CodecError(f"label {label} repeats or reorders group '{group}'", group=group)
            previous = position
        return self

    def __iter__(self) -> Iterator[int]:
        return iter(self.labels)

    def __getitem__(self, i: int) -> int:
        return self.labels[i]


def encode_record(record: AttributeRecord, table: MappingTable) -> LabelSequence:
    """One label per assigned group, in table group order.

    Raises:
        CodecError: For an unknown group or value, or an empty record.
    """
    for group, value in record.attributes.items():
        table.label_of(group, value)
    labels = [
        table.label_of(group.name, record.attributes[group.name])
        for group in table.groups
        if group.name in record.attributes
    ]
    if not labels:
        raise CodecError("attribute record assigns no group")
    return LabelSequence(tuple(labels)).validate(table)


def decode_sequence(labels: Iterable[int], table: MappingTable, pid: Optional[int] = None) -> AttributeRecord:
    """Total inverse of :func:`encode_record` for raw model output.

    The first label seen for a group decides its value; labels outside 1..K and
    later labels of an already-decided group are ignored.
    """
    decided: Dict[str, str] = {}
    for label in labels:
        if not table.has_label(label):
            continue
        group, value = table.entry(label)
        decided.setdefault(group, value)
    ordered = {name: decided[name] for name in table.group_names if name in decided}
    return AttributeRecord(ordered, pid=pid)


def extend_with_blanks(y: Iterable[int]) -> Tuple[int, ...]:
    """(y1, ..., yU) → (0, y1, 0, ..., yU, 0), length 2U + 1."""
    extended = [CTC_BLANK]
    for label in y:
        extended.extend((int(label), CTC_BLANK))
    return tuple(extended)


def prepare_decoder_io(
    y: Sequence[int],
    max_len: int,
    table: Optional[MappingTable] = None,
    start_symbol: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Teacher-forcing pair for the attention decoder.

    Returns ``(decoder_input, decoder_target)`` as raw symbols: the target is ``y``
    padded with 0 to ``max_len``; the input is the target shifted right by one
    with the start symbol in front.

    Raises:
        LengthError: If ``len(y) >= max_len``.
    """
    if start_symbol is None:
        start_symbol = table.start_symbol if table is not None else DEFAULT_START_SYMBOL
    labels = [int(label) for label in y]
    if len(labels) >= max_len:
        raise LengthError(
            f"sequence of length {len(labels)} needs max_len > {len(labels)}",
            length=len(labels),
            max_len=max_len,
        )
    target = np.full(max_len, DECODER_PAD, dtype=np.int64)
    target[: len(labels)] = labels
    decoder_input = np.concatenate(([start_symbol], target[:-1])).astype(np.int64)
    return decoder_input, target
