"""
Abstract repository interface for denoiser checkpoints.
"""
from abc import ABC, abstractmethod
from typing import List

from ..entities.checkpoint import DenoiserCheckpoint


class CheckpointRepository(ABC):
    """Persists DenoiserCheckpoint archives"""

    @abstractmethod
    def save(self, checkpoint: DenoiserCheckpoint, path: str) -> None:
        """Atomic write: a crash never leaves a half-written archive at path"""
        pass

    @abstractmethod
    def load(self, path: str) -> DenoiserCheckpoint:
        pass

    @abstractmethod
    def list_checkpoints(self, directory: str) -> List[str]:
        """Archive paths in a run directory, ordered by step"""
        pass
