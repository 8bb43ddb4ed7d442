"""
Gaussian moments of a feature set, the input of the Frechet distance.
"""
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class FeatureStats:
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if mean.ndim != 1 or cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance must be C x C for a mean of length C")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
            raise ValueError("covariance must be symmetric")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.linalg.eigvalsh(cov).min() < -PSD_TOLERANCE * scale:
            raise ValueError("covariance must be positive semi-definite")

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])
