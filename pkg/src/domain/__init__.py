"""
Domain entities, repository interfaces and services.
The numerical core of self-guided diffusion lives here; file formats and the
network implementation are in the infrastructure layer.
"""

# Export main entities
from .entities.guidance import GuidanceVariant, GuidanceSource, GuidanceSignal, GuidanceBatch
from .entities.noise_schedule import NoiseSchedule
from .entities.annotated_image import AnnotatedImage
from .entities.annotation import ClusterModel, AnnotationRecord, AnnotationSet
from .entities.feature_stats import FeatureStats
from .entities.checkpoint import DenoiserCheckpoint
from .entities.feature_extractor import FeatureExtractor, PatchFeatureExtractor, Granularity

# Export repository interfaces
from .repositories import (
    DatasetRepository,
    FeatureRepository,
    AnnotationRepository,
    CheckpointRepository,
)

# Export domain services
from .services import (
    DiffusionService,
    GuidanceService,
    ClusteringService,
    ProposalService,
    MetricsService,
    ShapesService,
    TrainingService,
    EvaluationService,
)

__all__ = [
    # Entities
    'GuidanceVariant', 'GuidanceSource', 'GuidanceSignal', 'GuidanceBatch',
    'NoiseSchedule', 'AnnotatedImage',
    'ClusterModel', 'AnnotationRecord', 'AnnotationSet',
    'FeatureStats', 'DenoiserCheckpoint',
    'FeatureExtractor', 'PatchFeatureExtractor', 'Granularity',

    # Repository interfaces
    'DatasetRepository',
    'FeatureRepository',
    'AnnotationRepository',
    'CheckpointRepository',

    # Domain services
    'DiffusionService',
    'GuidanceService',
    'ClusteringService',
    'ProposalService',
    'MetricsService',
    'ShapesService',
    'TrainingService',
    'EvaluationService',
]
