"""
Application layer exports.
Provides use cases and DTOs for the application layer.
"""

# Export DTOs
from .dto import (
    GenerateDataRequest,
    GenerateDataResponse,
    AnnotateRequest,
    AnnotateResponse,
    TrainRequest,
    TrainResponse,
    CheckpointDTO,
    SampleRequest,
    SampleResponse,
    EvaluateRequest,
    EvaluateResponse,
    SweepRequest,
    SweepResponse,
)

# Export Use Cases
from .use_cases.generate_data import GenerateDataUseCase
from .use_cases.annotate import AnnotateUseCase
from .use_cases.train_model import TrainModelUseCase
from .use_cases.sample_images import SampleImagesUseCase
from .use_cases.evaluate import EvaluateUseCase, VALID_METRICS
from .use_cases.sweep import SweepUseCase

__all__ = [
    # DTOs
    'GenerateDataRequest',
    'GenerateDataResponse',
    'AnnotateRequest',
    'AnnotateResponse',
    'TrainRequest',
    'TrainResponse',
    'CheckpointDTO',
    'SampleRequest',
    'SampleResponse',
    'EvaluateRequest',
    'EvaluateResponse',
    'SweepRequest',
    'SweepResponse',

    # Use Cases
    'GenerateDataUseCase',
    'AnnotateUseCase',
    'TrainModelUseCase',
    'SampleImagesUseCase',
    'EvaluateUseCase',
    'SweepUseCase',
    'VALID_METRICS',
]
