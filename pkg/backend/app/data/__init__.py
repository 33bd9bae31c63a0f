"""Synthetic pedestrians, manifests, augmentation and batching."""

from .image_io import encode_simg, decode_simg, read_simg, write_simg
from .manifest import (
    DatasetManifest,
    ManifestRow,
    load_manifest,
    merge_manifests,
    split_validation,
    write_manifest,
)
from .augment import FlipAugmenter, flip_augment
from .batching import Batch, ChannelStats, TrainingSet, identity_index, load_images, standardize
from .synthetic import (
    GeneratedDataset,
    Identity,
    SyntheticSpec,
    assign_identities,
    generate_dataset,
    read_attributes,
    render_image,
    render_layout,
)

__all__ = [
    "encode_simg",
    "decode_simg",
    "read_simg",
    "write_simg",
    "DatasetManifest",
    "ManifestRow",
    "load_manifest",
    "merge_manifests",
    "split_validation",
    "write_manifest",
    "FlipAugmenter",
    "flip_augment",
    "Batch",
    "ChannelStats",
    "TrainingSet",
    "identity_index",
    "load_images",
    "standardize",
    "GeneratedDataset",
    "Identity",
    "SyntheticSpec",
    "assign_identities",
    "generate_dataset",
    "read_attributes",
    "render_image",
    "render_layout",
]
