"""
Infrastructure layer exports.
Concrete repositories, the denoiser network, feature extractors and output writers.
"""

# Repository implementations
from .repositories import (
    FileDatasetRepository,
    FileFeatureRepository,
    FileAnnotationRepository,
    FileCheckpointRepository,
)

# Networks and features
from .networks import GuidedUNet, build_denoiser, load_denoiser
from .features import (
    ToyFeatureExtractor,
    ThumbnailFeatureExtractor,
    RawPatchExtractor,
    NearestCentroidClassifier,
)

# Exporters
from .exporters import PngExporter, ReportWriter, TrainingLog, plot_curve

__all__ = [
    # Repository implementations
    'FileDatasetRepository',
    'FileFeatureRepository',
    'FileAnnotationRepository',
    'FileCheckpointRepository',

    # Networks and features
    'GuidedUNet',
    'build_denoiser',
    'load_denoiser',
    'ToyFeatureExtractor',
    'ThumbnailFeatureExtractor',
    'RawPatchExtractor',
    'NearestCentroidClassifier',

    # Exporters
    'PngExporter',
    'ReportWriter',
    'TrainingLog',
    'plot_curve',
]
