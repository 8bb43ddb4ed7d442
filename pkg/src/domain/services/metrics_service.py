"""
Sample-quality metrics: Gaussian moment fitting, Frechet distance and an
Inception-Score-style diversity measure with a pluggable classifier.
"""
import logging
from typing import Callable, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import entropy

from ..entities.feature_stats import FeatureStats

logger = logging.getLogger(__name__)

# images (N x H x W x 3, [-1, 1]) -> N x C features
FeatureFn = Callable[[np.ndarray], np.ndarray]
# images -> N x K class probabilities
Classifier = Callable[[np.ndarray], np.ndarray]

EIGEN_CLIP_TOLERANCE = 1e-6
PROBABILITY_TOLERANCE = 1e-6


def _psd_eigenvalues(matrix: np.ndarray, name: str) -> Tuple[np.ndarray, np.ndarray]:
    """eigh with small negative eigenvalues clipped to zero, larger ones rejected"""
    values, vectors = linalg.eigh(matrix)
    scale = max(1.0, float(np.abs(values).max()) if values.size else 1.0)
    if values.size and values.min() < -EIGEN_CLIP_TOLERANCE * scale:
        raise ValueError(f"{name} is not positive semi-definite (eigenvalue {values.min():.3e})")
    return np.clip(values, 0.0, None), vectors


class MetricsService:
    """FID and IS on arbitrary feature functions"""

    @staticmethod
    def fit_gaussian(features: np.ndarray) -> FeatureStats:
        """Sample mean and unbiased (N - 1) covariance"""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be an N x C matrix")
        if features.shape[0] < 2:
            raise ValueError("fit_gaussian needs at least 2 samples")
        mean = features.mean(axis=0)
        centred = features - mean
        covariance = centred.T @ centred / (features.shape[0] - 1)
        covariance = 0.5 * (covariance + covariance.T)
        return FeatureStats(mean=mean, covariance=covariance, count=int(features.shape[0]))

    @staticmethod
    def frechet_distance(a: FeatureStats, b: FeatureStats) -> float:
        """
        ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

        The trace of the square root is taken from the eigenvalues of the symmetric
        matrix S_a^(1/2) S_b S_a^(1/2), which shares them with S_a S_b.
        """
        if a.dim != b.dim:
            raise ValueError(f"feature dimension mismatch: {a.dim} vs {b.dim}")
        values, vectors = _psd_eigenvalues(a.covariance, "covariance a")
        sqrt_a = (vectors * np.sqrt(values)) @ vectors.T
        middle = sqrt_a @ b.covariance @ sqrt_a
        middle = 0.5 * (middle + middle.T)
        middle_values, _ = _psd_eigenvalues(middle, "covariance product")
        trace_sqrt = float(np.sqrt(middle_values).sum())

        diff = a.mean - b.mean
        distance = float(diff @ diff + np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * trace_sqrt)
        return max(distance, 0.0)

    @staticmethod
    def compute_fid(samples: np.ndarray, reference: np.ndarray, feature_fn: FeatureFn) -> float:
        if len(samples) == 0 or len(reference) == 0:
            raise ValueError("compute_fid needs non-empty sample and reference sets")
        stats_samples = MetricsService.fit_gaussian(feature_fn(samples))
        stats_reference = MetricsService.fit_gaussian(feature_fn(reference))
        return MetricsService.frechet_distance(stats_samples, stats_reference)

    @staticmethod
    def inception_score_from_probs(probs: np.ndarray, splits: int = 10) -> Tuple[float, float]:
        """Per split exp(mean KL(p(y|x) || p(y))); mean and standard deviation over splits"""
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[0] == 0:
            raise ValueError("probabilities must be a non-empty N x K matrix")
        if splits < 1 or splits > probs.shape[0]:
            raise ValueError(f"splits must lie in [1, {probs.shape[0]}]")
        if probs.min() < 0.0 or np.abs(probs.sum(axis=1) - 1.0).max() > PROBABILITY_TOLERANCE:
            raise ValueError("classifier outputs are not normalized probability vectors")

        scores = []
        for part in np.array_split(probs, splits):
            marginal = part.mean(axis=0)
            kl = entropy(part.T, marginal[:, None], axis=0)
            scores.append(float(np.exp(kl.mean())))
        return float(np.mean(scores)), float(np.std(scores))

    @staticmethod
    def inception_score(samples: np.ndarray, classifier: Classifier, splits: int = 10) -> Tuple[float, float]:
        return MetricsService.inception_score_from_probs(classifier(samples), splits)
