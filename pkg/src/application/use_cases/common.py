"""
Helpers shared by the use cases: tensors from corpora, guidance pools,
sampling plans and the FID feature function.
"""
import logging
from typing import Callable, List, Optional, Sequence

import numpy as np
import torch

from ...config.experiment_config import DenoiserConfig, ExperimentConfig
from ...domain.entities.annotated_image import AnnotatedImage
from ...domain.entities.annotation import AnnotationSet
from ...domain.entities.checkpoint import DenoiserCheckpoint
from ...domain.entities.guidance import GuidanceBatch, GuidanceSignal, GuidanceSource
from ...domain.entities.noise_schedule import NoiseSchedule
from ...domain.exceptions import AnnotationCoverageError, GuidanceMismatchError
from ...domain.services import DiffusionService, SamplingPlan
from ...infrastructure.features import ToyFeatureExtractor
from ...infrastructure.networks import load_denoiser

logger = logging.getLogger(__name__)


def images_to_tensor(images: Sequence[AnnotatedImage]) -> torch.Tensor:
    """(N, 3, H, W) float32"""
    stacked = np.stack([image.pixels for image in images]).astype(np.float32)
    return torch.from_numpy(stacked).permute(0, 3, 1, 2).contiguous()


def images_to_array(images: Sequence[AnnotatedImage]) -> np.ndarray:
    """N x H x W x 3, the layout feature functions take"""
    return np.stack([image.pixels for image in images]).astype(np.float64)


def make_schedule(config: ExperimentConfig) -> NoiseSchedule:
    d = config.diffusion
    return DiffusionService.make_linear_schedule(d.timesteps, d.beta_start, d.beta_end)


def sampling_plan(config: ExperimentConfig, schedule: NoiseSchedule, device: str = "cpu") -> SamplingPlan:
    size = config.data.image_size
    return SamplingPlan(
        schedule=schedule,
        num_steps=config.sampler.num_steps,
        image_shape=(3, size, size),
        sigma_mode=config.sampler.sigma_mode,
        guidance_strength=config.sampler.guidance_strength,
        batch_size=config.sampler.sample_batch_size,
        device=device,
    )


def feature_function(config: ExperimentConfig) -> Callable[[np.ndarray], np.ndarray]:
    """Toy embedding used for FID"""
    extractor = ToyFeatureExtractor(config.annotation.toy_histogram_bins)
    return lambda images: extractor.extract_batch(images)


def denoiser_config_for(config: ExperimentConfig, annotations: Optional[AnnotationSet]) -> DenoiserConfig:
    """Model section with label_dim and input channels fitted to the guidance"""
    label_dim = annotations.label_dim if annotations is not None else 1
    mask_channels = annotations.mask_channels if annotations is not None else 0
    return config.model.model_copy(update={
        "image_size": config.data.image_size,
        "label_dim": label_dim,
        "in_channels": 3 + mask_channels,
    })


def check_coverage(images: Sequence[AnnotatedImage], annotations: AnnotationSet) -> None:
    """Every image annotated and no annotation for an unknown image"""
    ids = {image.id for image in images}
    missing = sorted(ids - set(annotations.records))
    extra = sorted(set(annotations.records) - ids)
    if missing or extra:
        raise AnnotationCoverageError(
            f"annotation/dataset id mismatch: {len(missing)} images unannotated (e.g. {missing[:5]}), "
            f"{len(extra)} annotations without image (e.g. {extra[:5]})"
        )


def guidance_pool(
    images: Sequence[AnnotatedImage],
    annotations: Optional[AnnotationSet],
) -> GuidanceBatch:
    """One guidance row per image, in dataset order; null rows without annotations"""
    if annotations is None or annotations.source == GuidanceSource.NONE:
        return GuidanceSignal.collate([GuidanceSignal.null(1) for _ in images])
    check_coverage(images, annotations)
    return GuidanceSignal.collate([annotations.guidance_for(image.id) for image in images])


def annotation_pool(annotations: Optional[AnnotationSet]) -> GuidanceBatch:
    """
    Guidance rows of every training annotation, in id order.

    Evaluation draws from this pool, so the reference corpus may be any split.
    """
    if annotations is None:
        return GuidanceSignal.collate([GuidanceSignal.null(1)])
    if annotations.source == GuidanceSource.NONE:
        return GuidanceSignal.collate([GuidanceSignal.null(annotations.label_dim)])
    if len(annotations) == 0:
        raise AnnotationCoverageError("the training annotation set is empty")
    return GuidanceSignal.collate([annotations.guidance_for(record.image_id) for record in annotations])


def checkpoint_source(checkpoint: DenoiserCheckpoint) -> GuidanceSource:
    return GuidanceSource(checkpoint.metadata.get("guidance_source", GuidanceSource.NONE.value))


def check_pool_fits(checkpoint: DenoiserCheckpoint, pool: GuidanceBatch) -> None:
    config = DenoiserConfig.model_validate(checkpoint.config)
    channels = 0 if pool.mask is None else int(pool.mask.shape[1])
    if pool.label_dim != config.label_dim or channels != config.mask_channels:
        raise GuidanceMismatchError(
            f"guidance (label_dim {pool.label_dim}, {channels} mask channels) does not fit checkpoint "
            f"(label_dim {config.label_dim}, {config.mask_channels} mask channels)"
        )


def denoiser_factory(device: str = "cpu", use_ema: bool = True):
    return lambda checkpoint: load_denoiser(checkpoint, use_ema=use_ema, device=device)


def gt_labels(images: Sequence[AnnotatedImage]) -> Optional[np.ndarray]:
    """Ground-truth class per image, or None when some image has none"""
    labels: List[int] = []
    for image in images:
        if image.gt_label is None:
            return None
        labels.append(image.gt_label)
    return np.asarray(labels, dtype=np.int64)


def gt_labels_for(images: Sequence[AnnotatedImage], annotations: AnnotationSet) -> Optional[np.ndarray]:
    """Ground-truth class of each annotated image, in annotation (id) order"""
    truth = gt_labels(images)
    if truth is None:
        return None
    by_id = {image.id: int(label) for image, label in zip(images, truth)}
    unknown = [record.image_id for record in annotations if record.image_id not in by_id]
    if unknown:
        raise AnnotationCoverageError(
            f"{len(unknown)} annotated ids are not in the dataset (e.g. {unknown[:5]})")
    return np.array([by_id[record.image_id] for record in annotations], dtype=np.int64)
