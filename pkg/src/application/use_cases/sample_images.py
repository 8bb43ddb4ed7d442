"""
Use case for drawing samples from a checkpoint, conditioned on a fixed cluster,
box or segmentation, or on guidance drawn from the training annotations.
"""
import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import torch

from ..dto import SampleRequest, SampleResponse
from ...config.experiment_config import DenoiserConfig, config_echo
from ...domain.entities.annotated_image import rasterize_boxes
from ...domain.entities.annotation import AnnotationSet
from ...domain.entities.checkpoint import DenoiserCheckpoint
from ...domain.entities.guidance import (
    GuidanceBatch,
    GuidanceSignal,
    GuidanceSource,
    GuidanceVariant,
    null_label,
    one_hot,
)
from ...domain.exceptions import AnnotationCoverageError, GuidanceMismatchError
from ...domain.repositories import AnnotationRepository, CheckpointRepository
from ...domain.services import EvaluationService
from ...domain.services.evaluation_service import to_hwc
from ...infrastructure.exporters import PngExporter
from ...infrastructure.networks import load_denoiser
from .common import annotation_pool, checkpoint_source, make_schedule, sampling_plan

logger = logging.getLogger(__name__)

GRID_NAME = "grid.png"


class SampleImagesUseCase:
    """DDIM sampling to PNG files"""

    def __init__(
        self,
        checkpoint_repository: CheckpointRepository,
        annotation_repository: AnnotationRepository,
        exporter: PngExporter,
        device: str = "cpu",
    ):
        self.checkpoint_repository = checkpoint_repository
        self.annotation_repository = annotation_repository
        self.exporter = exporter
        self.device = device

    def execute(self, request: SampleRequest) -> SampleResponse:
        if request.count < 1:
            raise ValueError("count must be >= 1")
        config = request.config

        # 1. Checkpoint and network
        checkpoint = self.checkpoint_repository.load(request.checkpoint_path)
        denoiser = load_denoiser(checkpoint, use_ema=request.use_ema, device=self.device)
        denoiser_config = DenoiserConfig.model_validate(checkpoint.config)

        # 2. Guidance for every sample
        guidance, condition = self._guidance(request, checkpoint, denoiser_config)

        # 3. Sample
        plan = sampling_plan(config, make_schedule(config), self.device)
        plan.image_shape = (3, denoiser_config.image_size, denoiser_config.image_size)
        w = config.sampler.guidance_strength if request.w is None else request.w
        samples = to_hwc(EvaluationService.sample_images(denoiser, guidance, plan, request.seed, guidance_strength=w))

        # 4. Export
        echo = config_echo(config)
        paths = self.exporter.export_images(list(samples), request.out_dir, echo)
        grid_path = self.exporter.export_grid(list(samples), str(Path(request.out_dir) / GRID_NAME), echo)
        logger.info(f"{request.count} samples ({condition}, w={w:g}) written to {request.out_dir}")
        return SampleResponse(grid_path=grid_path, sample_paths=paths, guidance_strength=w, condition=condition)

    def _guidance(
        self,
        request: SampleRequest,
        checkpoint: DenoiserCheckpoint,
        denoiser_config: DenoiserConfig,
    ) -> Tuple[GuidanceBatch, str]:
        source = checkpoint_source(checkpoint)
        variant = source.variant
        label_dim = denoiser_config.label_dim
        size = denoiser_config.image_size

        if request.segment_from is not None:
            if variant != GuidanceVariant.SEGMENTATION:
                raise GuidanceMismatchError(f"--segment-from needs a segmentation checkpoint, got {source.value}")
            if request.cluster is not None or request.box is not None:
                raise GuidanceMismatchError("--segment-from cannot be combined with --cluster or --box")
            annotations = self._annotations(request, checkpoint)
            if request.segment_from not in annotations:
                raise AnnotationCoverageError(f"no annotation for image {request.segment_from}")
            signal = annotations.guidance_for(request.segment_from)
            return self._repeat(signal, request.count), f"segmentation of image {request.segment_from}"

        if request.box is not None:
            if variant != GuidanceVariant.BOX:
                raise GuidanceMismatchError(f"--box needs a box checkpoint, got {source.value}")
            y0, x0, y1, x1 = request.box
            if not (0 <= y0 < y1 <= size and 0 <= x0 < x1 <= size):
                raise GuidanceMismatchError(f"box {request.box} outside the {size}x{size} canvas")
            label = self._cluster_label(request.cluster, label_dim) if request.cluster is not None \
                else null_label(label_dim)
            signal = GuidanceSignal(variant, label, rasterize_boxes([request.box], size, size))
            return self._repeat(signal, request.count), f"box {request.box}"

        if request.cluster is not None:
            if variant != GuidanceVariant.LABEL:
                raise GuidanceMismatchError(f"--cluster needs a label checkpoint, got {source.value}")
            signal = GuidanceSignal(variant, self._cluster_label(request.cluster, label_dim))
            return self._repeat(signal, request.count), f"cluster {request.cluster}"

        if source == GuidanceSource.NONE:
            return GuidanceSignal.collate([GuidanceSignal.null(label_dim)] * request.count), "unconditional"

        annotations = self._annotations(request, checkpoint)
        pool = annotation_pool(annotations)
        return EvaluationService.draw_guidance(pool, request.count, request.seed), "training distribution"

    @staticmethod
    def _cluster_label(cluster: int, label_dim: int) -> np.ndarray:
        if not 0 <= cluster < label_dim - 1:
            raise GuidanceMismatchError(f"cluster {cluster} outside [0, {label_dim - 1})")
        return one_hot(cluster, label_dim)

    @staticmethod
    def _repeat(signal: GuidanceSignal, count: int) -> GuidanceBatch:
        single = GuidanceSignal.collate([signal])
        return single.index(torch.zeros(count, dtype=torch.long))

    def _annotations(self, request: SampleRequest, checkpoint: DenoiserCheckpoint) -> AnnotationSet:
        path: Optional[str] = request.annotation_path or checkpoint.metadata.get("annotation_path")
        if not path:
            raise ValueError("this condition needs the training annotation file (--annotations)")
        annotations = self.annotation_repository.load(path)
        if annotations.label_dim != checkpoint.config.get("label_dim"):
            raise GuidanceMismatchError(f"annotations in {path} do not match the checkpoint label_dim")
        return annotations
