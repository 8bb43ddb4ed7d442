"""
Self-annotation entities: cluster model and per-image annotation records.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from .guidance import GuidanceSignal, GuidanceSource, GuidanceVariant, multi_hot, null_label, one_hot


@dataclass
class ClusterModel:
    """k-means centroids (K x C)"""

    centroids: np.ndarray
    objective: float = 0.0
    objective_history: List[float] = field(default_factory=list)
    iterations: int = 0

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ValueError("centroids must be a K x C matrix with K >= 1")
        if np.unique(self.centroids, axis=0).shape[0] != self.centroids.shape[0]:
            raise ValueError("centroids must be pairwise distinct")

    @property
    def K(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.centroids.shape[1])


@dataclass
class AnnotationRecord:
    """Annotation of one image; which fields are set depends on the variant"""

    image_id: int
    cluster: Optional[int] = None
    box_mask: Optional[np.ndarray] = None
    segmentation: Optional[np.ndarray] = None  # H x W x K one-hot
    multi_hot: Optional[np.ndarray] = None     # K entries, no null slot

    def __post_init__(self):
        if self.box_mask is not None:
            self.box_mask = np.asarray(self.box_mask, dtype=np.float32)
        if self.segmentation is not None:
            self.segmentation = np.asarray(self.segmentation, dtype=np.float32)
            if not np.all(self.segmentation.sum(axis=-1) == 1.0):
                raise ValueError(f"image {self.image_id}: segmentation must be one-hot per pixel")
        if self.multi_hot is not None:
            self.multi_hot = np.asarray(self.multi_hot, dtype=np.float32)


@dataclass
class AnnotationSet:
    """
    Annotations for a corpus.

    label_dim counts the null slot; mask_channels is 0 for label guidance,
    1 for boxes and K for segmentations.
    """

    source: GuidanceSource
    label_dim: int
    mask_channels: int = 0
    records: Dict[int, AnnotationRecord] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.label_dim < 1:
            raise ValueError("label_dim must be >= 1")
        expected = {GuidanceVariant.NONE: 0, GuidanceVariant.LABEL: 0}
        if self.variant in expected and self.mask_channels != 0:
            raise ValueError(f"{self.source.value} annotations carry no masks")
        if self.variant == GuidanceVariant.BOX and self.mask_channels != 1:
            raise ValueError("box annotations carry exactly one mask channel")

    @property
    def variant(self) -> GuidanceVariant:
        return self.source.variant

    def add(self, record: AnnotationRecord) -> None:
        if record.image_id in self.records:
            raise ValueError(f"duplicate annotation for image {record.image_id}")
        self.records[record.image_id] = record

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[AnnotationRecord]:
        return iter(self.records[i] for i in sorted(self.records))

    def __contains__(self, image_id: int) -> bool:
        return image_id in self.records

    def cluster_ids(self) -> np.ndarray:
        return np.array([r.cluster for r in self], dtype=np.int64)

    def guidance_for(self, image_id: int) -> GuidanceSignal:
        """Conditioning signal for one annotated image"""
        if self.variant == GuidanceVariant.NONE:
            return GuidanceSignal.null(self.label_dim)
        record = self.records[image_id]
        if self.variant == GuidanceVariant.SEGMENTATION:
            label = multi_hot(np.flatnonzero(record.multi_hot), self.label_dim)
            return GuidanceSignal(self.variant, label, record.segmentation)
        if record.multi_hot is not None:
            label = multi_hot(np.flatnonzero(record.multi_hot), self.label_dim)
        elif record.cluster is not None:
            label = one_hot(record.cluster, self.label_dim)
        else:
            label = null_label(self.label_dim)
        mask = record.box_mask if self.variant == GuidanceVariant.BOX else None
        return GuidanceSignal(self.variant, label, mask)
