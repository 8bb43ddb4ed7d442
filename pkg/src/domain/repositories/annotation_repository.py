"""
Abstract repository interface for annotation sets.
"""
from abc import ABC, abstractmethod

from ..entities.annotation import AnnotationSet


class AnnotationRepository(ABC):
    """Persists self- or ground-truth annotations for a corpus"""

    @abstractmethod
    def save(self, annotations: AnnotationSet, path: str) -> None:
        pass

    @abstractmethod
    def load(self, path: str) -> AnnotationSet:
        pass
