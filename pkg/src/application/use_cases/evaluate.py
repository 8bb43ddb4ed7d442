"""
Use case for scoring a checkpoint: FID and IS on fresh samples, NMI of the
annotation clusters against the ground truth.
"""
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from ..dto import EvaluateRequest, EvaluateResponse
from ...config.experiment_config import config_echo
from ...domain.entities.annotation import AnnotationSet
from ...domain.entities.guidance import GuidanceSource
from ...domain.repositories import AnnotationRepository, CheckpointRepository, DatasetRepository
from ...domain.services import ClusteringService, EvaluationService, MetricsService
from ...domain.services.evaluation_service import to_hwc
from ...infrastructure.exporters import ReportWriter
from ...infrastructure.features import NearestCentroidClassifier, ToyFeatureExtractor
from ...infrastructure.networks import load_denoiser
from .common import (
    annotation_pool,
    check_pool_fits,
    checkpoint_source,
    feature_function,
    gt_labels,
    gt_labels_for,
    images_to_array,
    make_schedule,
    sampling_plan,
)

logger = logging.getLogger(__name__)

VALID_METRICS = ("fid", "is", "nmi")


def check_metrics(metrics: List[str]) -> List[str]:
    """Normalised, de-duplicated metric names; unknown names are rejected"""
    if not metrics:
        raise ValueError(f"no metrics requested; valid names: {', '.join(VALID_METRICS)}")
    names = []
    for name in metrics:
        name = name.strip().lower()
        if name not in VALID_METRICS:
            raise ValueError(f"unknown metric {name!r}; valid names: {', '.join(VALID_METRICS)}")
        if name not in names:
            names.append(name)
    return names


class EvaluateUseCase:
    """Metric report for one checkpoint"""

    def __init__(
        self,
        dataset_repository: DatasetRepository,
        annotation_repository: AnnotationRepository,
        checkpoint_repository: CheckpointRepository,
        report_writer: ReportWriter,
        device: str = "cpu",
    ):
        self.dataset_repository = dataset_repository
        self.annotation_repository = annotation_repository
        self.checkpoint_repository = checkpoint_repository
        self.report_writer = report_writer
        self.device = device

    def execute(self, request: EvaluateRequest) -> EvaluateResponse:
        metrics = check_metrics(request.metrics)
        config = request.config
        evaluation = config.evaluation

        # 1. Inputs
        checkpoint = self.checkpoint_repository.load(request.checkpoint_path)
        images = self.dataset_repository.load(request.dataset_path)
        if len(images) < 2:
            raise ValueError("evaluation needs at least 2 reference images")
        annotations = self._annotations(request, checkpoint)
        w = config.sampler.guidance_strength if request.w is None else request.w

        # 2. Samples, shared by FID and IS
        samples = None
        if "fid" in metrics or "is" in metrics:
            pool = annotation_pool(annotations)
            check_pool_fits(checkpoint, pool)
            guidance = EvaluationService.draw_guidance(pool, evaluation.num_samples, evaluation.seed)
            plan = sampling_plan(config, make_schedule(config), self.device)
            denoiser = load_denoiser(checkpoint, device=self.device)
            samples = to_hwc(EvaluationService.sample_images(
                denoiser, guidance, plan, evaluation.seed, guidance_strength=w))

        # 3. Metrics
        results: Dict[str, Any] = {}
        reference = images_to_array(images)
        if "fid" in metrics:
            results["fid"] = MetricsService.compute_fid(samples, reference, feature_function(config))
            logger.info(f"FID {results['fid']:.4f}")
        if "is" in metrics:
            results["is"] = self._inception_score(samples, reference, images, config)
        if "nmi" in metrics:
            results["nmi"] = self._nmi(images, annotations)

        payload = {
            "metrics": results,
            "checkpoint": request.checkpoint_path,
            "step": checkpoint.step,
            "epoch": checkpoint.epoch,
            "guidance_source": checkpoint_source(checkpoint).value,
            "guidance_strength": w,
            "num_samples": evaluation.num_samples if samples is not None else 0,
        }
        path = self.report_writer.write_json(payload, request.out_path, config_echo(config))
        return EvaluateResponse(path=path, metrics=results)

    def _annotations(self, request: EvaluateRequest, checkpoint) -> Optional[AnnotationSet]:
        if checkpoint_source(checkpoint) == GuidanceSource.NONE and not request.annotation_path:
            return None
        path = request.annotation_path or checkpoint.metadata.get("annotation_path")
        if not path:
            raise ValueError("guided checkpoints need the training annotation file (--annotations)")
        return self.annotation_repository.load(path)

    @staticmethod
    def _inception_score(samples: np.ndarray, reference: np.ndarray, images, config) -> Dict[str, float]:
        labels = gt_labels(images)
        if labels is None:
            raise ValueError("the toy classifier needs ground-truth labels on the reference set")
        classifier = NearestCentroidClassifier(ToyFeatureExtractor(config.annotation.toy_histogram_bins))
        classifier.fit(reference, labels)
        splits = min(config.evaluation.is_splits, len(samples))
        mean, std = MetricsService.inception_score(samples, classifier, splits)
        logger.info(f"IS {mean:.4f} +- {std:.4f} over {splits} splits")
        return {"mean": mean, "std": std, "splits": splits}

    @staticmethod
    def _nmi(images, annotations: Optional[AnnotationSet]) -> float:
        if annotations is None or any(r.cluster is None for r in annotations):
            raise ValueError("nmi needs cluster annotations (label or box guidance)")
        truth = gt_labels_for(images, annotations)
        if truth is None:
            raise ValueError("nmi needs ground-truth labels on the dataset")
        return ClusteringService.nmi(annotations.cluster_ids(), truth)
