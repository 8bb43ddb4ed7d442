"""
Abstract repository interface for precomputed feature vectors.
"""
from abc import ABC, abstractmethod
from typing import Dict

import numpy as np


class FeatureRepository(ABC):
    """Maps image id -> feature vector exported by an offline backbone"""

    @abstractmethod
    def save(self, features: Dict[int, np.ndarray], path: str) -> None:
        pass

    @abstractmethod
    def append(self, features: Dict[int, np.ndarray], path: str) -> None:
        """Add another block to an existing file"""
        pass

    @abstractmethod
    def load(self, path: str) -> Dict[int, np.ndarray]:
        pass
