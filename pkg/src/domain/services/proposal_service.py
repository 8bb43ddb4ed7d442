"""
Spatial self-annotation: a patch-similarity box proposer, a per-patch clustering
segmenter and spatial max pooling of segmentation masks into multi-hot labels.
"""
import logging
from typing import Optional

import numpy as np
from scipy import ndimage

from ..entities.annotated_image import Box, rasterize_boxes, tight_box
from ..entities.annotation import ClusterModel
from ..entities.feature_extractor import FeatureExtractor, Granularity
from .clustering_service import ClusteringService

logger = logging.getLogger(__name__)

# 4-connectivity
_CROSS = ndimage.generate_binary_structure(2, 1)


def _require_patch_extractor(extractor: FeatureExtractor) -> None:
    if extractor.granularity != Granularity.PATCH:
        raise ValueError("proposer needs a patch-level feature extractor")


class ProposalService:
    """Box and segmentation proposals from patch features"""

    @staticmethod
    def propose_box_rect(
        pixels: np.ndarray,
        extractor: FeatureExtractor,
        threshold: float = 0.0,
        refine: bool = True,
    ) -> Box:
        """
        Single-object box.

        Patch features are centred over the image; the seed is the patch with the fewest
        positively correlated patches, the region is the 4-connected component of patches
        whose similarity to the seed exceeds the threshold.
        """
        _require_patch_extractor(extractor)
        height, width = pixels.shape[:2]
        grid = extractor.extract(pixels)
        gh, gw = grid.shape[:2]
        feats = grid.reshape(gh * gw, -1).astype(np.float64)
        feats = feats - feats.mean(axis=0)
        if np.allclose(feats, 0.0):
            logger.debug("uniform image, falling back to the full-image box")
            return 0, 0, height, width

        similarity = feats @ feats.T
        degree = (similarity > 0.0).sum(axis=1)
        seed = int(np.argmin(degree))
        candidates = (similarity[seed] > threshold).reshape(gh, gw)
        candidates[divmod(seed, gw)] = True
        components, _ = ndimage.label(candidates, structure=_CROSS)
        region = components == components[divmod(seed, gw)]

        py0, px0, py1, px1 = tight_box(region)
        size = extractor.patch_size
        box = (py0 * size, px0 * size, min(py1 * size, height), min(px1 * size, width))
        if refine:
            box = ProposalService._refine(pixels, box, divmod(seed, gw), size) or box
        return box

    @staticmethod
    def _refine(pixels: np.ndarray, box: Box, seed_cell, size: int) -> Optional[Box]:
        """Tight rectangle, inside the patch box, of pixels whose centred colour agrees with the seed patch"""
        centred = pixels.astype(np.float64) - pixels.reshape(-1, 3).mean(axis=0)
        sy, sx = seed_cell
        seed_colour = centred[sy * size:(sy + 1) * size, sx * size:(sx + 1) * size].reshape(-1, 3).mean(axis=0)
        if not np.any(seed_colour):
            return None
        y0, x0, y1, x1 = box
        agree = centred[y0:y1, x0:x1] @ seed_colour > 0.0
        inner = tight_box(agree)
        if inner is None:
            return None
        return y0 + inner[0], x0 + inner[1], y0 + inner[2], x0 + inner[3]

    @staticmethod
    def propose_box(
        pixels: np.ndarray,
        extractor: FeatureExtractor,
        threshold: float = 0.0,
        refine: bool = True,
    ) -> np.ndarray:
        """Binary H x W mask, 1 inside the proposed box"""
        box = ProposalService.propose_box_rect(pixels, extractor, threshold, refine)
        return rasterize_boxes([box], pixels.shape[0], pixels.shape[1])

    @staticmethod
    def segment_patches(pixels: np.ndarray, extractor: FeatureExtractor, model: ClusterModel) -> np.ndarray:
        """Cluster id per patch (H' x W')"""
        grid = extractor.extract(pixels)
        gh, gw = grid.shape[:2]
        return ClusteringService.assign_clusters(grid.reshape(gh * gw, -1), model).reshape(gh, gw)

    @staticmethod
    def propose_segmentation(
        pixels: np.ndarray,
        extractor: FeatureExtractor,
        K: int,
        model: ClusterModel,
    ) -> np.ndarray:
        """One-hot H x W x K mask from nearest-centroid patch ids, upsampled nearest-neighbour"""
        _require_patch_extractor(extractor)
        if model.K != K:
            raise ValueError(f"K mismatch: requested {K}, pixel cluster model has {model.K}")
        height, width = pixels.shape[:2]
        ids = ProposalService.segment_patches(pixels, extractor, model)
        size = extractor.patch_size
        rows = np.minimum(np.arange(height) // size, ids.shape[0] - 1)
        cols = np.minimum(np.arange(width) // size, ids.shape[1] - 1)
        upsampled = ids[rows[:, None], cols[None, :]]
        return np.eye(K, dtype=np.float32)[upsampled]

    @staticmethod
    def mask_to_multihot(mask: np.ndarray) -> np.ndarray:
        """Spatial max pooling R^{H x W x K} -> R^K"""
        mask = np.asarray(mask, dtype=np.float32)
        if mask.ndim != 3:
            raise ValueError("segmentation mask must be H x W x K")
        if mask.shape[0] * mask.shape[1] == 0:
            return np.zeros(mask.shape[2], dtype=np.float32)
        return mask.max(axis=(0, 1))
