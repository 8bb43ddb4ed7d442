"""
Self-labelling: k-means over feature embeddings, nearest-centroid assignment,
controlled corruption of the resulting cluster ids and NMI scoring.
"""
import logging
import math
from typing import List, Optional

import numpy as np
from sklearn.cluster import kmeans_plusplus
from sklearn.metrics import normalized_mutual_info_score

from ..entities.annotation import ClusterModel

logger = logging.getLogger(__name__)

CORRUPT_MODES = ("permute", "resample")
_CHUNK_ROWS = 8192
_MONOTONE_TOLERANCE = 1e-9


def squared_distances(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """N x K squared Euclidean distances, computed from explicit differences in row chunks"""
    out = np.empty((features.shape[0], centroids.shape[0]), dtype=np.float64)
    for start in range(0, features.shape[0], _CHUNK_ROWS):
        block = features[start:start + _CHUNK_ROWS]
        diff = block[:, None, :] - centroids[None, :, :]
        out[start:start + _CHUNK_ROWS] = np.einsum("nkc,nkc->nk", diff, diff)
    return out


class ClusteringService:
    """k-means self-annotation"""

    @staticmethod
    def kmeans_fit(
        features: np.ndarray,
        K: int,
        max_iters: int = 100,
        seed: int = 0,
        n_init: int = 1,
    ) -> ClusterModel:
        """
        Lloyd iterations from k-means++ seeds; the restart with the lowest objective wins.

        Empty clusters are re-seeded with the point farthest from its own centroid.
        The objective is checked to be non-increasing at every iteration.
        """
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be an N x C matrix")
        n = features.shape[0]
        if K < 1:
            raise ValueError("K must be >= 1")
        if n < K:
            raise ValueError(f"cannot fit {K} clusters to {n} points (N < K)")
        if np.unique(features, axis=0).shape[0] < K:
            raise ValueError(f"fewer than {K} distinct feature vectors")
        if max_iters < 1 or n_init < 1:
            raise ValueError("max_iters and n_init must be >= 1")

        rng = np.random.default_rng(seed)
        best: Optional[ClusterModel] = None
        for restart in range(n_init):
            init_state = int(rng.integers(0, 2 ** 31 - 1))
            model = ClusteringService._lloyd(features, K, max_iters, init_state)
            logger.debug(f"k-means restart {restart}: objective {model.objective:.6f} "
                         f"after {model.iterations} iterations")
            if best is None or model.objective < best.objective:
                best = model
        return best

    @staticmethod
    def _lloyd(features: np.ndarray, K: int, max_iters: int, init_state: int) -> ClusterModel:
        centroids, _ = kmeans_plusplus(features, n_clusters=K, random_state=init_state)
        centroids = centroids.astype(np.float64)
        rows = np.arange(features.shape[0])
        history: List[float] = []
        labels = None

        for _ in range(max_iters):
            d2 = squared_distances(features, centroids)
            new_labels = np.argmin(d2, axis=1)
            objective = float(d2[rows, new_labels].sum())
            ClusteringService._check_monotone(history, objective)
            history.append(objective)
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            centroids = ClusteringService._update_centroids(features, labels, centroids)
        else:
            d2 = squared_distances(features, centroids)
            objective = float(d2.min(axis=1).sum())
            ClusteringService._check_monotone(history, objective)
            history.append(objective)

        return ClusterModel(
            centroids=centroids,
            objective=history[-1],
            objective_history=history,
            iterations=len(history),
        )

    @staticmethod
    def _update_centroids(features: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
        K = centroids.shape[0]
        updated = centroids.copy()
        counts = np.bincount(labels, minlength=K)
        for j in np.flatnonzero(counts):
            updated[j] = features[labels == j].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            own = np.einsum("nc,nc->n", features - updated[labels], features - updated[labels])
            for j in empty:
                far = int(np.argmax(own))
                logger.debug(f"re-seeding empty cluster {j} with point {far}")
                updated[j] = features[far]
                own[far] = -1.0
        return updated

    @staticmethod
    def _check_monotone(history: List[float], objective: float) -> None:
        if history and objective > history[-1] + _MONOTONE_TOLERANCE * max(1.0, history[-1]):
            raise RuntimeError(f"k-means objective increased from {history[-1]} to {objective}")

    @staticmethod
    def assign_cluster(feature: np.ndarray, model: ClusterModel) -> int:
        """Nearest centroid; ties go to the lowest index"""
        feature = np.asarray(feature, dtype=np.float64)
        if feature.shape != (model.feature_dim,):
            raise ValueError(f"feature dim {feature.shape} does not match model dim {model.feature_dim}")
        diff = model.centroids - feature
        return int(np.argmin(np.einsum("kc,kc->k", diff, diff)))

    @staticmethod
    def assign_clusters(features: np.ndarray, model: ClusterModel) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != model.feature_dim:
            raise ValueError(f"features must be N x {model.feature_dim}")
        return np.argmin(squared_distances(features, model.centroids), axis=1).astype(np.int64)

    @staticmethod
    def corrupt_assignments(
        labels: np.ndarray,
        fraction: float,
        rng: np.random.Generator,
        mode: str = "permute",
        num_clusters: Optional[int] = None,
    ) -> np.ndarray:
        """
        Pick floor(fraction * N) positions without replacement and scramble their labels.

        permute shuffles the labels among the picked positions (label multiset kept);
        resample draws fresh labels uniformly from [0, num_clusters).
        """
        if not 0.0 <= fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        if mode not in CORRUPT_MODES:
            raise ValueError(f"unknown corruption mode {mode!r}; expected one of {CORRUPT_MODES}")
        labels = np.asarray(labels)
        out = labels.copy()
        count = math.floor(fraction * labels.shape[0] + 1e-9)
        if count == 0:
            return out
        picked = rng.choice(labels.shape[0], size=count, replace=False)
        if mode == "permute":
            out[picked] = labels[picked][rng.permutation(count)]
        else:
            k = num_clusters if num_clusters is not None else int(labels.max()) + 1
            out[picked] = rng.integers(0, k, size=count)
        return out

    @staticmethod
    def nmi(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
        """Normalized mutual information, arithmetic-mean normalization; two constant labelings score 1"""
        labels_a = np.asarray(labels_a)
        labels_b = np.asarray(labels_b)
        if labels_a.size == 0:
            raise ValueError("nmi of empty labelings is undefined")
        if labels_a.shape != labels_b.shape:
            raise ValueError("labelings must have equal length")
        if np.unique(labels_a).size == 1 and np.unique(labels_b).size == 1:
            return 1.0
        return float(normalized_mutual_info_score(labels_a, labels_b, average_method="arithmetic"))
