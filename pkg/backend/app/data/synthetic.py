"""Deterministic synthetic pedestrians.

Each identity is an (attribute combination, texture) pair. An image is a layout
of colored regions drawn from the identity's attributes, overlaid with the
identity texture on the clothing, then perturbed per image by camera brightness,
a small circular shift and Gaussian noise. :func:`read_attributes` inverts the
layout from pixels alone, so every generated label is recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from ..codec import AttributeRecord, MappingTable, default_table
from ..config.constants import CHANNEL_STATS_FILE, IMAGE_SUFFIX, TABLE_FILE
from ..config.settings import DataSettings
from ..exceptions import SpecError
from .batching import ChannelStats
from .image_io import write_simg
from .manifest import DatasetManifest, ManifestRow, write_manifest

BACKGROUND = 128.0

UP_COLORS: Dict[str, Tuple[int, int, int]] = {
    "red": (200, 30, 30),
    "green": (30, 170, 30),
    "blue": (30, 60, 200),
    "yellow": (220, 200, 30),
}
LOW_COLORS: Dict[str, Tuple[int, int, int]] = {
    "black": (25, 25, 25),
    "white": (235, 235, 235),
    "blue": (30, 50, 150),
    "brown": (120, 70, 30),
}
SKIN = (225, 180, 150)
HAIR = (70, 40, 15)
HAT = (150, 40, 160)
BACKPACK = (0, 150, 150)

# Regions as (top, bottom, left, right) fractions of the image.
HAT_BOX = (0.02, 0.09, 0.32, 0.68)
HEAD_BOX = (0.09, 0.21, 0.36, 0.64)
HAIR_BOXES = ((0.09, 0.30, 0.25, 0.36), (0.09, 0.30, 0.64, 0.75))
TORSO_BOX = (0.23, 0.55, 0.29, 0.71)
ARM_BOXES = ((0.23, 0.50, 0.14, 0.29), (0.23, 0.50, 0.71, 0.86))
SLEEVE_END = 0.32
BACKPACK_BOX = (0.25, 0.45, 0.0, 0.12)
LEGS_BOX = (0.57, 0.95, 0.32, 0.68)

# Probe windows used by the inverse predicate; they stay inside their region
# for shifts up to the default max_shift.
TORSO_PROBE = (0.30, 0.48, 0.36, 0.64)
LEGS_PROBE = (0.65, 0.88, 0.39, 0.61)
HAIR_ROWS = (0.0, 0.40)
FOREARM_ROWS = (0.30, 0.52)

COLOR_TOLERANCE = 45.0
TEXTURE_AMPLITUDE = 10.0
TEXTURE_TILE = 4
BRIGHTNESS_JITTER = 0.03

RENDERED_GROUPS: Tuple[Tuple[str, Tuple[str, ...]], ...] = tuple(
    (group.name, group.values) for group in default_table().groups
)


def _box(frac: Tuple[float, float, float, float], height: int, width: int) -> Tuple[slice, slice]:
    top, bottom, left, right = frac
    return (
        slice(int(round(top * height)), int(round(bottom * height))),
        slice(int(round(left * width)), int(round(right * width))),
    )


@dataclass
class SyntheticSpec:
    """Dataset recipe; identities are numbered globally from ``pid_offset + 1``.

    Training identities come first, then the disjoint test identities.
    """

    identities: int = 200
    test_identities: int = 200
    images_per_identity: int = 20
    height: int = 56
    width: int = 28
    cameras: int = 2
    seed: int = 7
    texture_capacity: int = 16
    noise_std: float = 6.0
    max_shift: int = 2
    # camera c gets brightness center + spread·(2c/(cameras-1) − 1)
    brightness_center: float = 1.0
    brightness_spread: float = 0.12
    pid_offset: int = 0
    table: MappingTable = field(default_factory=default_table)

    @classmethod
    def from_settings(cls, settings: DataSettings, height: int = 56, width: int = 28, **overrides) -> "SyntheticSpec":
        spec = cls(
            identities=settings.identities,
            test_identities=settings.test_identities,
            images_per_identity=settings.images_per_identity,
            height=height,
            width=width,
            cameras=settings.cameras,
            seed=settings.seed,
            texture_capacity=settings.texture_capacity,
            noise_std=settings.noise_std,
            max_shift=settings.max_shift,
        )
        return replace(spec, **overrides) if overrides else spec

    @property
    def total_identities(self) -> int:
        return self.identities + self.test_identities

    @property
    def combinations(self) -> int:
        return int(np.prod([len(group.values) for group in self.table.groups]))

    @property
    def capacity(self) -> int:
        return self.combinations * self.texture_capacity

    def validate(self) -> None:
        """Raise :class:`SpecError` if the recipe cannot be rendered."""
        rendered = dict(RENDERED_GROUPS)
        table_groups = {group.name: set(group.values) for group in self.table.groups}
        if table_groups != {name: set(values) for name, values in rendered.items()}:
            raise SpecError(
                "the renderer draws exactly the six default attribute groups",
                details={"groups": sorted(table_groups)},
            )
        for name in ("identities", "images_per_identity", "cameras", "texture_capacity"):
            if getattr(self, name) < 1:
                raise SpecError(f"{name} must be positive", details={name: getattr(self, name)})
        if self.test_identities < 0 or self.pid_offset < 0 or self.max_shift < 0 or self.noise_std < 0:
            raise SpecError("counts, shifts and noise must be nonnegative")
        if self.height < 16 or self.width < 8:
            raise SpecError("images must be at least 16×8", details={"size": (self.height, self.width)})
        if self.total_identities > self.capacity:
            raise SpecError(
                f"{self.total_identities} identities exceed capacity {self.capacity} "
                f"({self.combinations} attribute combinations × {self.texture_capacity} textures)",
                details={"identities": self.total_identities, "capacity": self.capacity},
            )


@dataclass(frozen=True)
class Identity:
    pid: int
    attributes: Mapping[str, str]
    texture: int


@dataclass
class GeneratedDataset:
    root: Path
    train: DatasetManifest
    test: DatasetManifest
    train_path: Path
    test_path: Path
    table_path: Path
    stats_path: Path
    stats: ChannelStats


def assign_identities(spec: SyntheticSpec) -> List[Identity]:
    """Distinct (attribute combination, texture) codes for every identity."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    codes = rng.choice(spec.capacity, size=spec.total_identities, replace=False)
    groups = spec.table.groups
    identities = []
    for i, code in enumerate(codes):
        combo, texture = divmod(int(code), spec.texture_capacity)
        attributes: Dict[str, str] = {}
        for group in reversed(groups):
            combo, choice = divmod(combo, len(group.values))
            attributes[group.name] = group.values[choice]
        ordered = {group.name: attributes[group.name] for group in groups}
        identities.append(Identity(spec.pid_offset + i + 1, ordered, texture))
    return identities


def texture_tile(spec: SyntheticSpec, texture: int) -> np.ndarray:
    """Zero-mean (H, W, 3) clothing pattern of one texture id."""
    rng = np.random.default_rng([spec.seed, 0, texture])
    tile = rng.uniform(-TEXTURE_AMPLITUDE, TEXTURE_AMPLITUDE, size=(TEXTURE_TILE, TEXTURE_TILE, 3))
    tile -= tile.mean(axis=(0, 1))
    reps = (-(-spec.height // TEXTURE_TILE), -(-spec.width // TEXTURE_TILE), 1)
    return np.tile(tile, reps)[: spec.height, : spec.width]


def camera_brightness(spec: SyntheticSpec, camera: int) -> float:
    if spec.cameras == 1:
        return spec.brightness_center
    position = 2.0 * camera / (spec.cameras - 1) - 1.0
    return spec.brightness_center + spec.brightness_spread * position


def render_layout(spec: SyntheticSpec, attributes: Mapping[str, str], texture: Optional[np.ndarray] = None) -> np.ndarray:
    """Noise-free float (H, W, 3) layout of one person."""
    h, w = spec.height, spec.width
    canvas = np.full((h, w, 3), BACKGROUND)
    clothing = np.zeros((h, w), dtype=bool)
    up = UP_COLORS[attributes["up_color"]]

    if attributes["gender"] == "female":
        for box in HAIR_BOXES:
            canvas[_box(box, h, w)] = HAIR
    canvas[_box(HEAD_BOX, h, w)] = SKIN
    if attributes["hat"] == "yes":
        canvas[_box(HAT_BOX, h, w)] = HAT

    for box in ARM_BOXES:
        rows, cols = _box(box, h, w)
        canvas[rows, cols] = up
        clothing[rows, cols] = True
        if attributes["sleeve"] == "short":
            bare = slice(int(round(SLEEVE_END * h)), rows.stop)
            canvas[bare, cols] = SKIN
            clothing[bare, cols] = False

    torso = _box(TORSO_BOX, h, w)
    canvas[torso] = up
    clothing[torso] = True
    legs = _box(LEGS_BOX, h, w)
    canvas[legs] = LOW_COLORS[attributes["low_color"]]
    clothing[legs] = True

    if attributes["backpack"] == "yes":
        canvas[_box(BACKPACK_BOX, h, w)] = BACKPACK

    if texture is not None:
        canvas[clothing] += texture[clothing]
    return canvas


def render_image(spec: SyntheticSpec, identity: Identity, index: int) -> Tuple[np.ndarray, int]:
    """One uint8 image of ``identity`` and the camera it was taken by."""
    rng = np.random.default_rng([spec.seed, identity.pid, index])
    camera = index % spec.cameras
    canvas = render_layout(spec, identity.attributes, texture_tile(spec, identity.texture))
    brightness = camera_brightness(spec, camera) + rng.uniform(-BRIGHTNESS_JITTER, BRIGHTNESS_JITTER)
    canvas = canvas * brightness
    dy, dx = rng.integers(-spec.max_shift, spec.max_shift + 1, size=2)
    canvas = np.roll(canvas, shift=(int(dy), int(dx)), axis=(0, 1))
    canvas = canvas + rng.normal(0.0, spec.noise_std, size=canvas.shape)
    return np.clip(np.rint(canvas), 0, 255).astype(np.uint8), camera


def _color_count(pixels: np.ndarray, color: Tuple[int, int, int]) -> int:
    distance = np.linalg.norm(pixels - np.asarray(color, dtype=np.float64), axis=-1)
    return int((distance < COLOR_TOLERANCE).sum())


def _nearest(mean: np.ndarray, palette: Mapping[str, Tuple[int, int, int]]) -> str:
    names = list(palette)
    distances = [np.linalg.norm(mean - np.asarray(palette[name])) for name in names]
    return names[int(np.argmin(distances))]


def read_attributes(image: np.ndarray) -> AttributeRecord:
    """Recover the rendered attributes of one image from its pixels.

    Brightness is normalized by the median pixel, which is background. Presence
    features (hat, backpack, hair, bare forearms) are counted over whole rows so
    they survive shifts and left-right flips.
    """
    pixels = np.asarray(image, dtype=np.float64)
    h, w = pixels.shape[:2]
    level = float(np.median(pixels.mean(axis=-1)))
    pixels = pixels * (BACKGROUND / max(level, 1.0))
    area = h * w / (56 * 28)

    def rows(frac: Tuple[float, float]) -> slice:
        return slice(int(round(frac[0] * h)), int(round(frac[1] * h)))

    torso = pixels[_box(TORSO_PROBE, h, w)].reshape(-1, 3).mean(axis=0)
    legs = pixels[_box(LEGS_PROBE, h, w)].reshape(-1, 3).mean(axis=0)
    attributes = {
        "gender": "female" if _color_count(pixels[rows(HAIR_ROWS)], HAIR) > 15 * area else "male",
        "hat": "yes" if _color_count(pixels, HAT) > 10 * area else "no",
        "backpack": "yes" if _color_count(pixels, BACKPACK) > 10 * area else "no",
        "sleeve": "short" if _color_count(pixels[rows(FOREARM_ROWS)], SKIN) > 16 * area else "long",
        "up_color": _nearest(torso, UP_COLORS),
        "low_color": _nearest(legs, LOW_COLORS),
    }
    return AttributeRecord(attributes)


def generate_dataset(
    spec: SyntheticSpec, out_dir: Union[str, Path], table: Optional[MappingTable] = None
) -> GeneratedDataset:
    """Render the train and test splits and their sidecar files.

    Writes ``images/<split>/<pid>_c<camera>_<index>.simg``, ``train.csv``,
    ``test.csv``, the mapping table and the training channel statistics. The
    same spec always produces byte-identical output.

    Args:
        table: Table written next to the manifests; defaults to ``spec.table``.
            Its groups must match the rendered ones.

    Raises:
        SpecError: If the spec is unsatisfiable.
    """
    out = Path(out_dir)
    table = table or spec.table
    if {g.name for g in table.groups} != {g.name for g in spec.table.groups}:
        raise SpecError("table groups differ from the rendered groups")
    identities = assign_identities(spec)
    group_names = table.group_names
    manifests: Dict[str, DatasetManifest] = {}
    train_images: List[np.ndarray] = []

    for split, members in (
        ("train", identities[: spec.identities]),
        ("test", identities[spec.identities :]),
    ):
        rows: List[ManifestRow] = []
        for identity in members:
            for index in range(spec.images_per_identity):
                image, camera = render_image(spec, identity, index)
                name = f"{identity.pid:05d}_c{camera}_{index:02d}{IMAGE_SUFFIX}"
                path = write_simg(out / "images" / split / name, image)
                rows.append(ManifestRow(path, identity.pid, camera, dict(identity.attributes)))
                if split == "train":
                    train_images.append(image)
        manifests[split] = DatasetManifest(rows, group_names, split)

    train_path = write_manifest(manifests["train"], out / "train.csv")
    test_path = write_manifest(manifests["test"], out / "test.csv")
    table_path = table.dump(out / TABLE_FILE)
    stats = ChannelStats.from_images(train_images)
    stats_path = stats.save(out / CHANNEL_STATS_FILE)
    return GeneratedDataset(
        root=out,
        train=manifests["train"],
        test=manifests["test"],
        train_path=train_path,
        test_path=test_path,
        table_path=table_path,
        stats_path=stats_path,
        stats=stats,
    )
