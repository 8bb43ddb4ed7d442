"""
File-backed repository implementations.
"""
from .file_dataset_repository import FileDatasetRepository, DATA_MAGIC
from .file_feature_repository import FileFeatureRepository, FEATURE_MAGIC
from .file_annotation_repository import FileAnnotationRepository, ANNOTATION_MAGIC
from .file_checkpoint_repository import FileCheckpointRepository, checkpoint_name

__all__ = [
    "FileDatasetRepository",
    "FileFeatureRepository",
    "FileAnnotationRepository",
    "FileCheckpointRepository",
    "DATA_MAGIC",
    "FEATURE_MAGIC",
    "ANNOTATION_MAGIC",
    "checkpoint_name",
]
