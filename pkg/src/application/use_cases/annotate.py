"""
Use case for annotating a corpus: self-annotation (features -> k-means / box proposal /
patch segmentation) or the ground-truth oracles, optional label corruption, and an
agreement report against the ground truth.
"""
import logging
from typing import List, Tuple

import numpy as np
from tqdm import tqdm

from ..dto import AnnotateRequest, AnnotateResponse
from ...config.experiment_config import AnnotationConfig, config_echo
from ...domain.entities.annotated_image import AnnotatedImage
from ...domain.entities.annotation import AnnotationRecord, AnnotationSet, ClusterModel
from ...domain.entities.guidance import GuidanceSource, GuidanceVariant
from ...domain.exceptions import AnnotationCoverageError
from ...domain.repositories import AnnotationRepository, DatasetRepository, FeatureRepository
from ...domain.services import ClusteringService, ProposalService
from ...infrastructure.features import RawPatchExtractor, build_image_extractor, l2_normalize
from .common import gt_labels, gt_labels_for

logger = logging.getLogger(__name__)

# upper bound on patches used to fit the pixel cluster model
SEGMENT_FIT_PATCHES = 50_000


def box_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of two binary masks; two empty masks agree perfectly"""
    a, b = a > 0.5, b > 0.5
    union = np.logical_or(a, b).sum()
    return 1.0 if union == 0 else float(np.logical_and(a, b).sum() / union)


def _num_classes(images: List[AnnotatedImage]) -> int:
    known = [image.num_classes for image in images if image.num_classes is not None]
    if known:
        return known[0]
    labels = gt_labels(images)
    if labels is None:
        raise AnnotationCoverageError("ground-truth annotations need num_classes or gt labels")
    return int(labels.max()) + 1


class AnnotateUseCase:
    """Produce and persist an AnnotationSet for one guidance source"""

    def __init__(
        self,
        dataset_repository: DatasetRepository,
        annotation_repository: AnnotationRepository,
        feature_repository: FeatureRepository,
    ):
        self.dataset_repository = dataset_repository
        self.annotation_repository = annotation_repository
        self.feature_repository = feature_repository

    def execute(self, request: AnnotateRequest) -> AnnotateResponse:
        config = request.config
        settings = config.annotation
        source = request.source or config.train.guidance_variant

        # 1. Load the corpus
        images = self.dataset_repository.load(request.dataset_path)
        if not images:
            raise ValueError("cannot annotate an empty dataset")
        if settings.corrupt_fraction > 0 and source.variant == GuidanceVariant.SEGMENTATION:
            raise ValueError("label corruption applies to label and box guidance only")

        # 2. Annotate
        builders = {
            GuidanceSource.NONE: self._annotate_none,
            GuidanceSource.SELF_LABEL: self._annotate_self_label,
            GuidanceSource.GT_LABEL: self._annotate_gt_label,
            GuidanceSource.SELF_BOX: self._annotate_self_box,
            GuidanceSource.GT_BOX: self._annotate_gt_box,
            GuidanceSource.SELF_SEGMENT: self._annotate_self_segment,
            GuidanceSource.GT_SEGMENT: self._annotate_gt_segment,
        }
        annotations = builders[source](images, settings)

        # 3. Corrupt cluster ids
        if settings.corrupt_fraction > 0 and source != GuidanceSource.NONE:
            self._corrupt(annotations, settings)

        # 4. Agreement with the ground truth
        if source.variant in (GuidanceVariant.LABEL, GuidanceVariant.BOX):
            truth = gt_labels_for(images, annotations)
            if truth is not None:
                annotations.metadata["nmi"] = ClusteringService.nmi(annotations.cluster_ids(), truth)

        annotations.metadata.update({
            "source": source.value,
            "label_dim": annotations.label_dim,
            "mask_channels": annotations.mask_channels,
            "feature_type": settings.feature_type,
            "dataset": request.dataset_path,
            "count": len(annotations),
            "config": config_echo(config),
        })

        # 5. Persist
        self.annotation_repository.save(annotations, request.out_path)
        response = AnnotateResponse.from_domain(request.out_path, annotations)
        if response.nmi is not None:
            logger.info(f"{source.value} annotations agree with ground truth at NMI {response.nmi:.4f}")
        return response

    # label sources

    def _image_features(self, images: List[AnnotatedImage], settings: AnnotationConfig) -> np.ndarray:
        """l2-normalised image-level features, one row per image"""
        if settings.feature_type == "precomputed":
            table = self.feature_repository.load(settings.features_path)
            missing = [image.id for image in images if image.id not in table]
            if missing:
                raise AnnotationCoverageError(
                    f"feature file {settings.features_path} lacks {len(missing)} image ids (e.g. {missing[:5]})")
            features = np.stack([table[image.id] for image in images])
        else:
            extractor = build_image_extractor(settings.feature_type, settings.toy_histogram_bins)
            features = np.stack([
                extractor.extract(image.pixels)
                for image in tqdm(images, desc="features", unit="img", disable=None)
            ])
        return l2_normalize(features)

    def _cluster_images(
        self, images: List[AnnotatedImage], settings: AnnotationConfig
    ) -> Tuple[np.ndarray, ClusterModel]:
        features = self._image_features(images, settings)
        model = ClusteringService.kmeans_fit(
            features,
            settings.num_clusters,
            max_iters=settings.kmeans_max_iters,
            seed=settings.seed,
            n_init=settings.kmeans_restarts,
        )
        logger.info(f"k-means K={model.K}: objective {model.objective:.4f} after {model.iterations} iterations")
        return ClusteringService.assign_clusters(features, model), model

    def _annotate_none(self, images, settings) -> AnnotationSet:
        annotations = AnnotationSet(source=GuidanceSource.NONE, label_dim=1)
        for image in images:
            annotations.add(AnnotationRecord(image_id=image.id))
        return annotations

    def _annotate_self_label(self, images, settings) -> AnnotationSet:
        labels, model = self._cluster_images(images, settings)
        annotations = AnnotationSet(
            source=GuidanceSource.SELF_LABEL,
            label_dim=model.K + 1,
            metadata={"num_clusters": model.K, "kmeans_objective": model.objective},
        )
        for image, label in zip(images, labels):
            annotations.add(AnnotationRecord(image_id=image.id, cluster=int(label)))
        return annotations

    def _annotate_gt_label(self, images, settings) -> AnnotationSet:
        truth = gt_labels(images)
        if truth is None:
            raise AnnotationCoverageError("gt-label needs a ground-truth label on every image")
        num_classes = _num_classes(images)
        annotations = AnnotationSet(
            source=GuidanceSource.GT_LABEL,
            label_dim=num_classes + 1,
            metadata={"num_clusters": num_classes},
        )
        for image, label in zip(images, truth):
            annotations.add(AnnotationRecord(image_id=image.id, cluster=int(label)))
        return annotations

    # box sources

    def _annotate_self_box(self, images, settings) -> AnnotationSet:
        labels, model = self._cluster_images(images, settings)
        extractor = RawPatchExtractor(settings.box_patch_size)
        annotations = AnnotationSet(
            source=GuidanceSource.SELF_BOX,
            label_dim=model.K + 1,
            mask_channels=1,
            metadata={"num_clusters": model.K, "kmeans_objective": model.objective},
        )
        ious = []
        for image, label in zip(tqdm(images, desc="boxes", unit="img", disable=None), labels):
            mask = ProposalService.propose_box(
                image.pixels, extractor, settings.box_threshold, settings.box_refine_pixels)
            annotations.add(AnnotationRecord(image_id=image.id, cluster=int(label), box_mask=mask))
            if image.gt_box is not None:
                ious.append(box_iou(mask, image.gt_box))
        if ious:
            annotations.metadata["mean_box_iou"] = float(np.mean(ious))
            annotations.metadata["box_iou_at_50"] = float(np.mean(np.asarray(ious) >= 0.5))
            logger.info(f"Box proposals: mean IoU {annotations.metadata['mean_box_iou']:.3f}, "
                        f"{100 * annotations.metadata['box_iou_at_50']:.1f}% at IoU >= 0.5")
        return annotations

    def _annotate_gt_box(self, images, settings) -> AnnotationSet:
        truth = gt_labels(images)
        if truth is None or any(image.gt_box is None for image in images):
            raise AnnotationCoverageError("gt-box needs a ground-truth label and box on every image")
        num_classes = _num_classes(images)
        annotations = AnnotationSet(
            source=GuidanceSource.GT_BOX,
            label_dim=num_classes + 1,
            mask_channels=1,
            metadata={"num_clusters": num_classes},
        )
        for image, label in zip(images, truth):
            annotations.add(AnnotationRecord(image_id=image.id, cluster=int(label), box_mask=image.gt_box))
        return annotations

    # segmentation sources

    def _fit_pixel_clusters(self, images, extractor: RawPatchExtractor, settings: AnnotationConfig) -> ClusterModel:
        patches = np.concatenate([
            extractor.extract(image.pixels).reshape(-1, extractor.feature_dim) for image in images
        ])
        if patches.shape[0] > SEGMENT_FIT_PATCHES:
            rng = np.random.default_rng(settings.seed)
            patches = patches[np.sort(rng.choice(patches.shape[0], SEGMENT_FIT_PATCHES, replace=False))]
        return ClusteringService.kmeans_fit(
            patches,
            settings.segment_clusters,
            max_iters=settings.kmeans_max_iters,
            seed=settings.seed,
            n_init=settings.kmeans_restarts,
        )

    def _annotate_self_segment(self, images, settings) -> AnnotationSet:
        extractor = RawPatchExtractor(settings.segment_patch_size)
        model = self._fit_pixel_clusters(images, extractor, settings)
        K = model.K
        annotations = AnnotationSet(
            source=GuidanceSource.SELF_SEGMENT,
            label_dim=K + 1,
            mask_channels=K,
            metadata={"num_clusters": K, "kmeans_objective": model.objective},
        )
        proposed, truth = [], []
        for image in tqdm(images, desc="segments", unit="img", disable=None):
            mask = ProposalService.propose_segmentation(image.pixels, extractor, K, model)
            annotations.add(AnnotationRecord(
                image_id=image.id,
                segmentation=mask,
                multi_hot=ProposalService.mask_to_multihot(mask),
            ))
            if image.gt_segmentation_map is not None:
                proposed.append(mask.argmax(axis=-1).ravel())
                truth.append(image.gt_segmentation_map.ravel())
        if truth and len(truth) == len(images):
            annotations.metadata["pixel_nmi"] = ClusteringService.nmi(np.concatenate(proposed),
                                                                       np.concatenate(truth))
        return annotations

    def _annotate_gt_segment(self, images, settings) -> AnnotationSet:
        if any(image.gt_segmentation is None for image in images):
            raise AnnotationCoverageError("gt-segment needs a ground-truth segmentation on every image")
        channels = _num_classes(images) + 1
        annotations = AnnotationSet(
            source=GuidanceSource.GT_SEGMENT,
            label_dim=channels + 1,
            mask_channels=channels,
            metadata={"num_clusters": channels},
        )
        for image in images:
            mask = image.gt_segmentation
            annotations.add(AnnotationRecord(
                image_id=image.id,
                segmentation=mask,
                multi_hot=ProposalService.mask_to_multihot(mask),
            ))
        return annotations

    @staticmethod
    def _corrupt(annotations: AnnotationSet, settings: AnnotationConfig) -> None:
        """Scramble cluster ids in place and flag the set"""
        records = list(annotations)
        labels = np.array([record.cluster for record in records], dtype=np.int64)
        rng = np.random.default_rng(np.random.SeedSequence([settings.seed, 1]))
        corrupted = ClusteringService.corrupt_assignments(
            labels,
            settings.corrupt_fraction,
            rng,
            mode=settings.corrupt_mode,
            num_clusters=annotations.label_dim - 1,
        )
        for record, label in zip(records, corrupted):
            record.cluster = int(label)
        annotations.metadata["corruption"] = {
            "fraction": settings.corrupt_fraction,
            "mode": settings.corrupt_mode,
            "seed": settings.seed,
            "count": int(np.floor(settings.corrupt_fraction * len(labels) + 1e-9)),
            "changed": int((corrupted != labels).sum()),
        }
        logger.info(f"Corrupted {annotations.metadata['corruption']['count']} of {len(labels)} cluster ids "
                    f"({settings.corrupt_mode})")
