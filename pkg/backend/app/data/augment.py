"""Left-right flip augmentation, used for training batches only."""

from __future__ import annotations

import numpy as np

from ..exceptions import ParameterError


def flip_augment(image: np.ndarray) -> np.ndarray:
    """Mirror an (H, W, C) image (or a (B, H, W, C) batch) horizontally."""
    image = np.asarray(image)
    if image.ndim not in (3, 4):
        raise ParameterError(f"expected an (H, W, C) image or a batch, got shape {image.shape}", param_name="image")
    return np.ascontiguousarray(np.flip(image, axis=-2))


class FlipAugmenter:
    """Flips each image independently with ``probability``.

    The draw order is fixed per batch so a seeded augmenter yields the same
    stream of flips on every run.
    """

    def __init__(self, probability: float = 0.5, seed: int = 0):
        if not 0.0 <= probability <= 1.0:
            raise ParameterError(f"flip probability must be in [0, 1], got {probability}", param_name="probability")
        self.probability = probability
        self.rng = np.random.default_rng(seed)

    def __call__(self, image: np.ndarray) -> np.ndarray:
        return flip_augment(image) if self.rng.random() < self.probability else image

    def apply_batch(self, images: np.ndarray) -> np.ndarray:
        flips = self.rng.random(len(images)) < self.probability
        out = np.array(images, copy=True)
        if flips.any():
            out[flips] = flip_augment(out[flips])
        return out
