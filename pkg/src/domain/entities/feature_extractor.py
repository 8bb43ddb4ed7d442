"""
Feature extraction interface: image-level embeddings or a grid of patch features.
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import Sequence

import numpy as np


class Granularity(Enum):
    IMAGE = "image"
    PATCH = "patch"


class FeatureExtractor(ABC):
    """Deterministic map from an H x W x 3 image in [-1, 1] to features of fixed dimension"""

    granularity: Granularity = Granularity.IMAGE

    @property
    @abstractmethod
    def feature_dim(self) -> int:
        pass

    @abstractmethod
    def extract(self, pixels: np.ndarray) -> np.ndarray:
        """R^C for image-level extractors, H' x W' x C for patch-level ones"""
        pass

    def extract_batch(self, images: Sequence[np.ndarray]) -> np.ndarray:
        if len(images) == 0:
            return np.zeros((0, self.feature_dim), dtype=np.float64)
        return np.stack([self.extract(pixels) for pixels in images])

    def __call__(self, pixels: np.ndarray) -> np.ndarray:
        return self.extract(pixels)


class PatchFeatureExtractor(FeatureExtractor):
    """Patch-level extractor on a non-overlapping grid of patch_size x patch_size cells"""

    granularity = Granularity.PATCH

    def __init__(self, patch_size: int):
        if patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        self.patch_size = patch_size

    def grid_shape(self, height: int, width: int):
        return -(-height // self.patch_size), -(-width // self.patch_size)
