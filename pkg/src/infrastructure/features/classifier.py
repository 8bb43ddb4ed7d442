"""
Toy classifier for the Inception-Score-style metric: softmax over negative squared
distances to per-class centroids of toy features.
"""
import logging
from typing import Sequence

import numpy as np
from scipy.special import softmax

from ...domain.entities.feature_extractor import FeatureExtractor

logger = logging.getLogger(__name__)


class NearestCentroidClassifier:
    """p(y | x) proportional to exp(-||f(x) - c_y||^2 / temperature)"""

    def __init__(self, extractor: FeatureExtractor):
        self.extractor = extractor
        self.centroids = None
        self.temperature = 1.0

    def fit(self, images: np.ndarray, labels: Sequence[int]) -> "NearestCentroidClassifier":
        """Centroids from ground-truth labels; temperature = mean squared distance to the own centroid"""
        labels = np.asarray(labels, dtype=np.int64)
        features = self.extractor.extract_batch(list(images))
        if features.shape[0] != labels.shape[0] or labels.size == 0:
            raise ValueError("need one label per image and at least one image")
        num_classes = int(labels.max()) + 1
        self.centroids = np.zeros((num_classes, features.shape[1]))
        for c in range(num_classes):
            members = features[labels == c]
            # absent classes keep a centroid no sample is closest to
            self.centroids[c] = members.mean(axis=0) if members.size else np.full(features.shape[1], np.inf)
        own = ((features - self.centroids[labels]) ** 2).sum(axis=1)
        self.temperature = max(float(own.mean()), 1e-8)
        logger.debug(f"Toy classifier fit on {labels.size} images, {num_classes} classes, "
                     f"temperature {self.temperature:.4g}")
        return self

    @property
    def num_classes(self) -> int:
        return 0 if self.centroids is None else int(self.centroids.shape[0])

    def predict_proba(self, images: np.ndarray) -> np.ndarray:
        if self.centroids is None:
            raise RuntimeError("classifier used before fit")
        features = self.extractor.extract_batch(list(images))
        diff = features[:, None, :] - self.centroids[None, :, :]
        logits = -np.einsum("nkc,nkc->nk", diff, diff) / self.temperature
        logits = np.where(np.isfinite(logits), logits, -np.inf)
        return softmax(logits, axis=1)

    def __call__(self, images: np.ndarray) -> np.ndarray:
        return self.predict_proba(images)
