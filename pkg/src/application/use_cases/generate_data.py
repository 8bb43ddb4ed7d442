"""
Use case for generating the synthetic shapes corpus.
"""
import logging

from ..dto import GenerateDataRequest, GenerateDataResponse
from ...config.experiment_config import config_echo
from ...domain.repositories import DatasetRepository
from ...domain.services import ShapesService

logger = logging.getLogger(__name__)


class GenerateDataUseCase:
    """Generate, optionally unbalance, and persist a corpus"""

    def __init__(self, dataset_repository: DatasetRepository, workers: int = 1):
        self.dataset_repository = dataset_repository
        self.workers = workers

    def execute(self, request: GenerateDataRequest) -> GenerateDataResponse:
        shapes = request.config.data

        # 1. Generate
        images = ShapesService.generate_shapes(shapes, workers=self.workers)

        # 2. Unbalanced split
        if request.unbalanced_max_per_class is not None:
            images = ShapesService.make_unbalanced(images, request.unbalanced_max_per_class, shapes.num_classes)

        # 3. Persist with the config echo
        self.dataset_repository.save(images, request.out_path, config_echo(request.config))

        summary = ShapesService.summary(images, shapes.num_classes)
        logger.info(f"Corpus of {len(images)} images written to {request.out_path}")
        return GenerateDataResponse(path=request.out_path, count=len(images), summary=summary)
