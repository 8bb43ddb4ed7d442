"""
Domain services: the numerical operations that span several entities.
"""

from .diffusion_service import DiffusionService
from .guidance_service import GuidanceService
from .clustering_service import ClusteringService
from .proposal_service import ProposalService
from .metrics_service import MetricsService
from .shapes_service import ShapesService
from .training_service import TrainingService
from .evaluation_service import EvaluationService, SamplingPlan

__all__ = [
    'DiffusionService',
    'GuidanceService',
    'ClusteringService',
    'ProposalService',
    'MetricsService',
    'ShapesService',
    'TrainingService',
    'EvaluationService',
    'SamplingPlan',
]
