"""
Guidance signal entities.
A guidance signal is what the denoiser is conditioned on: nothing, a label vector,
a box mask plus label, or a K-channel segmentation mask plus its pooled multi-hot.
"""
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import torch


class GuidanceVariant(Enum):
    """Granularity of the conditioning signal the network sees"""
    NONE = "none"
    LABEL = "label"
    BOX = "box"
    SEGMENTATION = "segmentation"

    @property
    def is_spatial(self) -> bool:
        return self in (GuidanceVariant.BOX, GuidanceVariant.SEGMENTATION)


class GuidanceSource(Enum):
    """Where the guidance comes from: self-annotation or ground-truth oracle"""
    NONE = "none"
    SELF_LABEL = "self-label"
    GT_LABEL = "gt-label"
    SELF_BOX = "self-box"
    GT_BOX = "gt-box"
    SELF_SEGMENT = "self-segment"
    GT_SEGMENT = "gt-segment"

    @property
    def variant(self) -> GuidanceVariant:
        return {
            GuidanceSource.NONE: GuidanceVariant.NONE,
            GuidanceSource.SELF_LABEL: GuidanceVariant.LABEL,
            GuidanceSource.GT_LABEL: GuidanceVariant.LABEL,
            GuidanceSource.SELF_BOX: GuidanceVariant.BOX,
            GuidanceSource.GT_BOX: GuidanceVariant.BOX,
            GuidanceSource.SELF_SEGMENT: GuidanceVariant.SEGMENTATION,
            GuidanceSource.GT_SEGMENT: GuidanceVariant.SEGMENTATION,
        }[self]

    @property
    def is_self_annotated(self) -> bool:
        return self.value.startswith("self-")


def null_label(label_dim: int) -> np.ndarray:
    """One-hot on the reserved null slot (last index)"""
    if label_dim < 1:
        raise ValueError("label_dim must be >= 1")
    vec = np.zeros(label_dim, dtype=np.float32)
    vec[label_dim - 1] = 1.0
    return vec


def one_hot(index: int, label_dim: int) -> np.ndarray:
    if not 0 <= index < label_dim - 1:
        raise ValueError(f"label index {index} outside [0, {label_dim - 1})")
    vec = np.zeros(label_dim, dtype=np.float32)
    vec[index] = 1.0
    return vec


def multi_hot(indices: Sequence[int], label_dim: int) -> np.ndarray:
    vec = np.zeros(label_dim, dtype=np.float32)
    for index in indices:
        if not 0 <= index < label_dim - 1:
            raise ValueError(f"label index {index} outside [0, {label_dim - 1})")
        vec[index] = 1.0
    return vec


@dataclass
class GuidanceSignal:
    """
    Per-image guidance.

    label has K+1 entries, index K is the null slot. spatial_mask is H x W for boxes
    and H x W x K for segmentations; the null spatial guidance is the all-zero mask.
    """

    variant: GuidanceVariant
    label: np.ndarray
    spatial_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.label = np.asarray(self.label, dtype=np.float32)
        self._validate_label()
        self._validate_mask()

    def _validate_label(self) -> None:
        if self.label.ndim != 1 or self.label.shape[0] < 1:
            raise ValueError("label must be a non-empty vector")
        if not np.all((self.label == 0.0) | (self.label == 1.0)):
            raise ValueError("label entries must be 0 or 1")
        if self.variant == GuidanceVariant.NONE and not np.array_equal(
                self.label, null_label(self.label_dim)):
            raise ValueError("variant none requires the null one-hot label")

    def _validate_mask(self) -> None:
        if not self.variant.is_spatial:
            if self.spatial_mask is not None:
                raise ValueError(f"variant {self.variant.value} carries no spatial mask")
            return
        if self.spatial_mask is None:
            raise ValueError(f"variant {self.variant.value} requires a spatial mask")
        mask = np.asarray(self.spatial_mask, dtype=np.float32)
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ValueError("mask entries must be 0 or 1")
        if self.variant == GuidanceVariant.BOX:
            if mask.ndim != 2:
                raise ValueError("box mask must be H x W")
        else:
            if mask.ndim != 3:
                raise ValueError("segmentation mask must be H x W x K")
            sums = mask.sum(axis=-1)
            # all-zero is the dropped (null) mask
            if not (np.all(sums == 1.0) or np.all(sums == 0.0)):
                raise ValueError("segmentation mask must be one-hot at every pixel")
        self.spatial_mask = mask

    @property
    def label_dim(self) -> int:
        return int(self.label.shape[0])

    @property
    def mask_channels(self) -> int:
        if self.spatial_mask is None:
            return 0
        return 1 if self.spatial_mask.ndim == 2 else int(self.spatial_mask.shape[-1])

    @property
    def is_null(self) -> bool:
        label_null = np.array_equal(self.label, null_label(self.label_dim))
        mask_null = self.spatial_mask is None or not np.any(self.spatial_mask)
        return label_null and mask_null

    def nulled(self) -> "GuidanceSignal":
        """Same shapes, null content"""
        mask = None if self.spatial_mask is None else np.zeros_like(self.spatial_mask)
        return replace(self, label=null_label(self.label_dim), spatial_mask=mask)

    def mask_tensor(self) -> Optional[torch.Tensor]:
        """Channels-first float tensor (C, H, W)"""
        if self.spatial_mask is None:
            return None
        mask = self.spatial_mask[..., None] if self.spatial_mask.ndim == 2 else self.spatial_mask
        return torch.from_numpy(np.ascontiguousarray(mask.transpose(2, 0, 1)))

    @classmethod
    def null(cls, label_dim: int = 1) -> "GuidanceSignal":
        return cls(variant=GuidanceVariant.NONE, label=null_label(label_dim))

    @staticmethod
    def collate(signals: List["GuidanceSignal"]) -> "GuidanceBatch":
        if not signals:
            raise ValueError("cannot collate an empty guidance list")
        dims = {s.label_dim for s in signals}
        channels = {s.mask_channels for s in signals}
        if len(dims) != 1 or len(channels) != 1:
            raise ValueError("guidance signals in one batch must share label_dim and mask channels")
        label = torch.from_numpy(np.stack([s.label for s in signals]))
        mask = None
        if channels.pop() > 0:
            mask = torch.stack([s.mask_tensor() for s in signals])
        return GuidanceBatch(label=label, mask=mask)


@dataclass
class GuidanceBatch:
    """Collated guidance: label (B, L) and optional mask (B, C, H, W)"""

    label: torch.Tensor
    mask: Optional[torch.Tensor] = None

    def __post_init__(self):
        if self.label.dim() != 2:
            raise ValueError("batched label must be (B, label_dim)")
        if self.mask is not None and (self.mask.dim() != 4 or self.mask.shape[0] != self.label.shape[0]):
            raise ValueError("batched mask must be (B, C, H, W) with matching batch size")

    def __len__(self) -> int:
        return int(self.label.shape[0])

    @property
    def label_dim(self) -> int:
        return int(self.label.shape[1])

    def null_like(self) -> "GuidanceBatch":
        label = torch.zeros_like(self.label)
        label[:, -1] = 1.0
        mask = None if self.mask is None else torch.zeros_like(self.mask)
        return GuidanceBatch(label=label, mask=mask)

    def to(self, device, dtype: Optional[torch.dtype] = None) -> "GuidanceBatch":
        kwargs = {"device": device}
        if dtype is not None:
            kwargs["dtype"] = dtype
        mask = None if self.mask is None else self.mask.to(**kwargs)
        return GuidanceBatch(label=self.label.to(**kwargs), mask=mask)

    def concat(self, other: "GuidanceBatch") -> "GuidanceBatch":
        mask = None
        if self.mask is not None and other.mask is not None:
            mask = torch.cat([self.mask, other.mask])
        elif (self.mask is None) != (other.mask is None):
            raise ValueError("cannot concatenate spatial and non-spatial guidance")
        return GuidanceBatch(label=torch.cat([self.label, other.label]), mask=mask)

    def index(self, rows) -> "GuidanceBatch":
        mask = None if self.mask is None else self.mask[rows]
        return GuidanceBatch(label=self.label[rows], mask=mask)

    def where_null(self, drop: torch.Tensor) -> "GuidanceBatch":
        """Replace rows flagged in the boolean vector `drop` by the null guidance"""
        null = self.null_like()
        keep = ~drop
        label = torch.where(keep[:, None], self.label, null.label)
        mask = None
        if self.mask is not None:
            mask = torch.where(keep[:, None, None, None], self.mask, null.mask)
        return GuidanceBatch(label=label, mask=mask)
