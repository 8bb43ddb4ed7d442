"""
Abstract repository interface for annotated image corpora.
"""
from abc import ABC, abstractmethod
from typing import List, Optional

from ..entities.annotated_image import AnnotatedImage


class DatasetRepository(ABC):
    """Persists a list of AnnotatedImage together with a config echo"""

    @abstractmethod
    def save(self, images: List[AnnotatedImage], path: str, config_echo: str = "{}") -> None:
        """Write the corpus atomically"""
        pass

    @abstractmethod
    def load(self, path: str) -> List[AnnotatedImage]:
        """Read a corpus; raises FileFormatError on bad magic or truncation"""
        pass

    @abstractmethod
    def read_config_echo(self, path: str) -> Optional[str]:
        """Config echo stored in the file header"""
        pass
