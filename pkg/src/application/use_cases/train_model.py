"""
Use case for training a guided denoiser on an annotated corpus.
"""
import logging
import time
from pathlib import Path
from typing import List, Optional

from ..dto import CheckpointDTO, TrainRequest, TrainResponse
from ...config.experiment_config import config_echo
from ...domain.entities.annotation import AnnotationSet
from ...domain.entities.checkpoint import DenoiserCheckpoint
from ...domain.entities.guidance import GuidanceSource
from ...domain.exceptions import GuidanceMismatchError
from ...domain.repositories import AnnotationRepository, CheckpointRepository, DatasetRepository
from ...domain.services import EvaluationService, TrainingService
from ...infrastructure.exporters import ReportWriter, TrainingLog
from ...infrastructure.networks import build_denoiser
from ...infrastructure.repositories import checkpoint_name
from ...utils.performance_monitor import get_performance_stats, log_performance_summary, reset_performance_stats
from .common import (
    denoiser_config_for,
    denoiser_factory,
    feature_function,
    guidance_pool,
    images_to_array,
    images_to_tensor,
    make_schedule,
    sampling_plan,
)

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.jsonl"
BUDGET_NAME = "budget.json"
BEST_NAME = "best.ckpt"


class TrainModelUseCase:
    """Train, checkpoint, record the budget and optionally pick the best checkpoint"""

    def __init__(
        self,
        dataset_repository: DatasetRepository,
        annotation_repository: AnnotationRepository,
        checkpoint_repository: CheckpointRepository,
        report_writer: ReportWriter,
        version: str,
        device: str = "cpu",
    ):
        self.dataset_repository = dataset_repository
        self.annotation_repository = annotation_repository
        self.checkpoint_repository = checkpoint_repository
        self.report_writer = report_writer
        self.version = version
        self.device = device

    def execute(self, request: TrainRequest) -> TrainResponse:
        config = request.config
        source = config.train.guidance_variant
        echo = config_echo(config)
        out_dir = Path(request.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        # 1. Data and guidance
        images = self.dataset_repository.load(request.dataset_path)
        annotations = self._load_annotations(request, source)
        pool = guidance_pool(images, annotations)
        denoiser_config = denoiser_config_for(config, annotations)
        schedule = make_schedule(config)

        # 2. Network, possibly resumed
        resume = None
        if request.resume_path:
            resume = self.checkpoint_repository.load(request.resume_path)
            if resume.config != denoiser_config.model_dump(mode="json"):
                raise GuidanceMismatchError(
                    f"checkpoint {request.resume_path} was trained with a different denoiser config")
        denoiser = build_denoiser(denoiser_config, seed=config.train.seed)

        # 3. Train
        written: List[CheckpointDTO] = []

        def save_checkpoint(checkpoint: DenoiserCheckpoint) -> None:
            path = str(out_dir / checkpoint_name(checkpoint.step))
            self.checkpoint_repository.save(checkpoint, path)
            written.append(CheckpointDTO.from_domain(path, checkpoint))

        metadata = {
            "guidance_source": source.value,
            "annotation_path": request.annotation_path,
            "dataset_path": request.dataset_path,
            "config": echo,
            "version": self.version,
        }
        reset_performance_stats()
        log_path = str(out_dir / LOG_NAME)
        started = time.monotonic()
        with TrainingLog(log_path, self.version, echo, append=resume is not None) as training_log:
            checkpoints = TrainingService.train(
                denoiser,
                images_to_tensor(images),
                pool,
                schedule,
                config.train,
                denoiser_config.model_dump(mode="json"),
                metadata=metadata,
                resume=resume,
                on_checkpoint=save_checkpoint,
                on_log=training_log,
                device=self.device,
            )
        wall_seconds = time.monotonic() - started
        log_performance_summary()

        # 4. Budget record
        budget_path = self.report_writer.write_json({
            "max_wall_seconds": config.train.max_wall_seconds,
            "elapsed_seconds": wall_seconds,
            "steps": checkpoints[-1].step if checkpoints else (resume.step if resume else 0),
            "epochs": checkpoints[-1].epoch if checkpoints else (resume.epoch if resume else 0),
            "guidance_source": source.value,
            "timings": get_performance_stats(),
        }, str(out_dir / BUDGET_NAME), echo)

        # 5. Checkpoint selection
        best_path = None
        if config.evaluation.select_best and checkpoints:
            best_path = self._select_best(config, checkpoints, images, pool, schedule, out_dir)

        logger.info(f"Training finished in {wall_seconds:.1f}s, {len(written)} checkpoints in {out_dir}")
        return TrainResponse(
            checkpoints=written,
            log_path=log_path,
            budget_path=budget_path,
            wall_seconds=wall_seconds,
            best_path=best_path,
        )

    def _load_annotations(self, request: TrainRequest, source: GuidanceSource) -> Optional[AnnotationSet]:
        if source == GuidanceSource.NONE:
            return None
        if not request.annotation_path:
            raise ValueError(f"guidance variant {source.value} needs an annotation file")
        annotations = self.annotation_repository.load(request.annotation_path)
        if annotations.source != source:
            raise GuidanceMismatchError(
                f"annotation file holds {annotations.source.value} guidance, config asks for {source.value}")
        return annotations

    def _select_best(self, config, checkpoints, images, pool, schedule, out_dir: Path) -> str:
        best = EvaluationService.select_checkpoint(
            checkpoints,
            images_to_array(images),
            feature_function(config),
            config.evaluation.selection_samples,
            denoiser_factory(self.device),
            pool,
            sampling_plan(config, schedule, self.device),
            seed=config.evaluation.seed,
        )
        path = str(out_dir / BEST_NAME)
        self.checkpoint_repository.save(best, path)
        logger.info(f"Best checkpoint: epoch {best.epoch}, step {best.step}")
        return path
