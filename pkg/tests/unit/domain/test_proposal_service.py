"""
Unit tests for ProposalService.
Box proposals, per-patch segmentation and spatial max pooling.
"""
import itertools

import numpy as np
import pytest

from src.domain.entities.annotation import ClusterModel
from src.domain.entities.feature_extractor import PatchFeatureExtractor
from src.domain.services import ClusteringService, ProposalService
from src.infrastructure.features import RawPatchExtractor, ToyFeatureExtractor


def square_image(size=16, y0=4, x0=8, extent=8):
    pixels = -np.ones((size, size, 3))
    pixels[y0:y0 + extent, x0:x0 + extent] = 1.0
    return pixels


class TestProposeBox:
    """Test propose_box_rect and propose_box"""

    def test_square_found_at_patch_resolution(self):
        """Test a white square on black covering a 2 x 2 block of 4-pixel patches"""
        box = ProposalService.propose_box_rect(square_image(), RawPatchExtractor(4), refine=False)

        assert box == (4, 8, 12, 16)

    def test_refinement_tightens_to_pixels(self):
        """Test pixel refinement on a square not aligned with the patch grid"""
        pixels = square_image(y0=5, x0=6, extent=6)

        box = ProposalService.propose_box_rect(pixels, RawPatchExtractor(4), refine=True)

        assert box == (5, 6, 11, 12)

    def test_uniform_image_gives_full_box(self):
        """Test the documented fallback on a flat image"""
        mask = ProposalService.propose_box(np.zeros((8, 8, 3)), RawPatchExtractor(2))

        np.testing.assert_array_equal(mask, np.ones((8, 8)))

    def test_mask_is_binary_rectangle(self):
        """Test the rasterised proposal"""
        mask = ProposalService.propose_box(square_image(), RawPatchExtractor(4), refine=False)

        assert set(np.unique(mask)) == {0.0, 1.0}
        assert mask[4:12, 8:16].all()
        assert mask.sum() == 64

    def test_requires_patch_extractor(self):
        """Test image-level extractors are rejected"""
        with pytest.raises(ValueError, match="patch-level"):
            ProposalService.propose_box_rect(square_image(), ToyFeatureExtractor())


class TestSegmentation:
    """Test propose_segmentation"""

    def test_two_regions(self):
        """Test a red/blue split recovers the ground-truth partition up to channel order"""
        pixels = np.zeros((8, 8, 3))
        pixels[:, :4] = [1.0, -1.0, -1.0]
        pixels[:, 4:] = [-1.0, -1.0, 1.0]
        extractor = RawPatchExtractor(2)
        grid = extractor.extract(pixels)
        model = ClusteringService.kmeans_fit(grid.reshape(-1, grid.shape[-1]), 2)

        mask = ProposalService.propose_segmentation(pixels, extractor, 2, model)

        truth = np.zeros((8, 8), dtype=int)
        truth[:, 4:] = 1
        predicted = mask.argmax(axis=-1)
        assert any(np.array_equal(predicted, np.array(perm)[truth]) for perm in itertools.permutations(range(2)))
        np.testing.assert_array_equal(mask.sum(axis=-1), np.ones((8, 8)))

    def test_single_cluster(self):
        """Test K = 1 gives an all-ones single channel"""
        extractor = RawPatchExtractor(2)
        model = ClusterModel(centroids=np.zeros((1, extractor.feature_dim)))

        mask = ProposalService.propose_segmentation(square_image(8, 2, 2, 4), extractor, 1, model)

        np.testing.assert_array_equal(mask, np.ones((8, 8, 1)))

    def test_uneven_grid_upsampling(self):
        """Test image sizes not divisible by the patch size"""
        extractor = RawPatchExtractor(4)
        model = ClusterModel(centroids=np.stack([np.zeros(48), np.ones(48)]))

        mask = ProposalService.propose_segmentation(np.zeros((6, 6, 3)), extractor, 2, model)

        assert mask.shape == (6, 6, 2)

    def test_k_mismatch(self):
        """Test K must match the cluster model"""
        extractor = RawPatchExtractor(2)
        model = ClusterModel(centroids=np.zeros((1, extractor.feature_dim)))

        with pytest.raises(ValueError, match="K mismatch"):
            ProposalService.propose_segmentation(np.zeros((4, 4, 3)), extractor, 2, model)

    def test_patch_extractor_interface(self):
        """Test the grid shape rounds up"""
        assert RawPatchExtractor(4).grid_shape(6, 9) == (2, 3)
        assert isinstance(RawPatchExtractor(4), PatchFeatureExtractor)


class TestMaskToMultihot:
    """Test spatial max pooling"""

    def test_all_zero(self):
        """Test an empty mask pools to zeros"""
        np.testing.assert_array_equal(ProposalService.mask_to_multihot(np.zeros((4, 4, 3))), np.zeros(3))

    def test_single_pixel(self):
        """Test one active pixel in channel 2"""
        mask = np.zeros((4, 4, 4))
        mask[1, 3, 2] = 1.0

        np.testing.assert_array_equal(ProposalService.mask_to_multihot(mask), [0, 0, 1, 0])

    def test_matches_pixel_scan(self, rng):
        """Test pooling against an exhaustive scan"""
        mask = np.zeros((5, 5, 4))
        mask[rng.integers(0, 5), rng.integers(0, 5), 0] = 1.0
        mask[rng.integers(0, 5), rng.integers(0, 5), 3] = 1.0

        pooled = ProposalService.mask_to_multihot(mask)

        expected = np.zeros(4)
        for y, x, k in itertools.product(range(5), range(5), range(4)):
            expected[k] = max(expected[k], mask[y, x, k])
        np.testing.assert_array_equal(pooled, expected)
        np.testing.assert_array_equal(np.flatnonzero(pooled), [0, 3])

    def test_rank_checked(self):
        """Test 2-D masks are rejected"""
        with pytest.raises(ValueError):
            ProposalService.mask_to_multihot(np.zeros((4, 4)))
