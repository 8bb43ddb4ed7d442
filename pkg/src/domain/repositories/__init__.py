"""
Repository interfaces for the persisted artefacts: datasets, feature files,
annotation sets and checkpoints.
Implementations live in the infrastructure layer.
"""

from .dataset_repository import DatasetRepository
from .feature_repository import FeatureRepository
from .annotation_repository import AnnotationRepository
from .checkpoint_repository import CheckpointRepository

__all__ = [
    'DatasetRepository',
    'FeatureRepository',
    'AnnotationRepository',
    'CheckpointRepository',
]
