"""
Built-in feature extractors standing in for pretrained self-supervised backbones.
"""
import logging

import numpy as np
import torch
import torch.nn.functional as F

from ...domain.entities.feature_extractor import FeatureExtractor, PatchFeatureExtractor

logger = logging.getLogger(__name__)

ORIENTATION_BINS = 8
FOREGROUND_THRESHOLD = 0.1
THUMBNAIL_SIZE = 4


def _check_pixels(pixels: np.ndarray) -> np.ndarray:
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError("expected an H x W x 3 image")
    return pixels


def foreground_mask(pixels: np.ndarray, threshold: float = FOREGROUND_THRESHOLD) -> np.ndarray:
    """Pixels whose colour differs from the median border colour by more than threshold"""
    border = np.concatenate([pixels[0], pixels[-1], pixels[:, 0], pixels[:, -1]])
    background = np.median(border, axis=0)
    return np.abs(pixels - background).max(axis=-1) > threshold


class ToyFeatureExtractor(FeatureExtractor):
    """
    Hand-crafted 3 * bins + 16 dimensional embedding (64 with the default 16 bins):

    - per-channel colour histogram of the foreground (all pixels when there is none)
    - magnitude-weighted gradient orientation histogram (8 bins)
    - gradient magnitude pooled over a 2 x 2 grid
    - mean colour and foreground fraction
    """

    def __init__(self, histogram_bins: int = 16):
        if histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")
        self.histogram_bins = histogram_bins

    @property
    def feature_dim(self) -> int:
        return 3 * self.histogram_bins + ORIENTATION_BINS + 4 + 3 + 1

    def extract(self, pixels: np.ndarray) -> np.ndarray:
        pixels = _check_pixels(pixels)
        fg = foreground_mask(pixels)
        region = pixels[fg] if fg.any() else pixels.reshape(-1, 3)

        colour = []
        for channel in range(3):
            hist, _ = np.histogram(region[:, channel], bins=self.histogram_bins, range=(-1.0, 1.0))
            colour.append(hist / max(region.shape[0], 1))

        gy, gx = np.gradient(pixels, axis=(0, 1))
        magnitude = np.sqrt(gx ** 2 + gy ** 2).sum(axis=-1)
        angle = np.mod(np.arctan2(gy.sum(axis=-1), gx.sum(axis=-1)), np.pi)
        orientation, _ = np.histogram(angle, bins=ORIENTATION_BINS, range=(0.0, np.pi), weights=magnitude)
        total = magnitude.sum()
        orientation = orientation / total if total > 0 else orientation

        h2, w2 = max(pixels.shape[0] // 2, 1), max(pixels.shape[1] // 2, 1)
        pooled = [
            magnitude[:h2, :w2].mean(), magnitude[:h2, w2:].mean() if pixels.shape[1] > 1 else 0.0,
            magnitude[h2:, :w2].mean() if pixels.shape[0] > 1 else 0.0,
            magnitude[h2:, w2:].mean() if pixels.shape[0] > 1 and pixels.shape[1] > 1 else 0.0,
        ]

        return np.concatenate([
            *colour,
            orientation,
            np.asarray(pooled),
            pixels.reshape(-1, 3).mean(axis=0),
            [fg.mean()],
        ]).astype(np.float64)


class ThumbnailFeatureExtractor(FeatureExtractor):
    """Area-downsampled 4 x 4 RGB thumbnail, flattened (48-d)"""

    def __init__(self, size: int = THUMBNAIL_SIZE):
        self.size = size

    @property
    def feature_dim(self) -> int:
        return 3 * self.size * self.size

    def extract(self, pixels: np.ndarray) -> np.ndarray:
        pixels = _check_pixels(pixels)
        tensor = torch.from_numpy(pixels).permute(2, 0, 1)[None]
        pooled = F.adaptive_avg_pool2d(tensor, self.size)[0]
        return pooled.permute(1, 2, 0).reshape(-1).numpy()


class RawPatchExtractor(PatchFeatureExtractor):
    """Raw pixel values of non-overlapping patches; edges padded by replication"""

    @property
    def feature_dim(self) -> int:
        return 3 * self.patch_size * self.patch_size

    def extract(self, pixels: np.ndarray) -> np.ndarray:
        pixels = _check_pixels(pixels)
        gh, gw = self.grid_shape(*pixels.shape[:2])
        size = self.patch_size
        padded = np.pad(
            pixels,
            ((0, gh * size - pixels.shape[0]), (0, gw * size - pixels.shape[1]), (0, 0)),
            mode="edge",
        )
        patches = padded.reshape(gh, size, gw, size, 3).transpose(0, 2, 1, 3, 4)
        return patches.reshape(gh, gw, self.feature_dim)


def l2_normalize(features: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Row-wise unit norm; zero rows stay zero"""
    norms = np.linalg.norm(features, axis=-1, keepdims=True)
    return features / np.maximum(norms, eps)


def build_image_extractor(feature_type: str, histogram_bins: int = 16) -> FeatureExtractor:
    if feature_type == "toy":
        return ToyFeatureExtractor(histogram_bins)
    if feature_type == "thumbnail":
        return ThumbnailFeatureExtractor()
    raise ValueError(f"no built-in image extractor for feature_type {feature_type!r}")
