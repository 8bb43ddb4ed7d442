"""
Annotated image entity: pixels in [-1, 1] with optional ground-truth annotations.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

# (y0, x0, y1, x1), end-exclusive
Box = Tuple[int, int, int, int]


def rasterize_boxes(boxes: List[Box], height: int, width: int) -> np.ndarray:
    """Binary H x W mask, 1 inside any of the boxes"""
    mask = np.zeros((height, width), dtype=np.float32)
    for y0, x0, y1, x1 in boxes:
        mask[y0:y1, x0:x1] = 1.0
    return mask


def tight_box(mask: np.ndarray) -> Optional[Box]:
    """Smallest rectangle enclosing the non-zero pixels of a 2-D mask"""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    return int(rows[0]), int(cols[0]), int(rows[-1]) + 1, int(cols[-1]) + 1


@dataclass
class AnnotatedImage:
    """
    One corpus image.

    gt_segmentation_map holds the class index per pixel (num_classes = background);
    the one-hot view is exposed through gt_segmentation.
    """

    id: int
    pixels: np.ndarray
    gt_label: Optional[int] = None
    gt_labels: Tuple[int, ...] = ()
    gt_boxes: List[Box] = field(default_factory=list)
    gt_segmentation_map: Optional[np.ndarray] = None
    num_classes: Optional[int] = None

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.id < 0:
            raise ValueError("image id must be unsigned")
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("pixels must be H x W x 3")
        if self.pixels.size and (self.pixels.min() < -1.0 or self.pixels.max() > 1.0):
            raise ValueError("pixels must lie in [-1, 1]")
        if self.gt_label is not None and not self.gt_labels:
            self.gt_labels = (self.gt_label,)
        self.gt_labels = tuple(int(c) for c in self.gt_labels)
        self._validate_boxes()
        self._validate_segmentation()

    def _validate_boxes(self) -> None:
        h, w = self.height, self.width
        for y0, x0, y1, x1 in self.gt_boxes:
            if not (0 <= y0 < y1 <= h and 0 <= x0 < x1 <= w):
                raise ValueError(f"box {(y0, x0, y1, x1)} outside {h}x{w} image")

    def _validate_segmentation(self) -> None:
        if self.gt_segmentation_map is None:
            return
        seg = np.asarray(self.gt_segmentation_map)
        if seg.shape != (self.height, self.width):
            raise ValueError("segmentation map must match image spatial dims")
        if self.num_classes is None:
            raise ValueError("segmentation requires num_classes")
        if seg.min() < 0 or seg.max() > self.num_classes:
            raise ValueError("segmentation class index out of range")
        self.gt_segmentation_map = seg.astype(np.int16)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def gt_box(self) -> Optional[np.ndarray]:
        """Binary mask covering every ground-truth box"""
        if not self.gt_boxes:
            return None
        return rasterize_boxes(self.gt_boxes, self.height, self.width)

    @property
    def gt_segmentation(self) -> Optional[np.ndarray]:
        """One-hot H x W x (num_classes + 1), background channel last"""
        if self.gt_segmentation_map is None:
            return None
        eye = np.eye(self.num_classes + 1, dtype=np.float32)
        return eye[self.gt_segmentation_map]

    def to_uint8(self) -> np.ndarray:
        """Gamma-free 8-bit view: x -> round(255 * (x + 1) / 2)"""
        return np.round(255.0 * (self.pixels + 1.0) / 2.0).astype(np.uint8)
