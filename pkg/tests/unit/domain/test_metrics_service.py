"""
Unit tests for MetricsService.
Gaussian fitting, the Frechet distance and the Inception-Score computation.
"""
import math

import numpy as np
import pytest
from scipy.stats import ortho_group

from src.domain.entities.feature_stats import FeatureStats
from src.domain.services import MetricsService


def flatten(images: np.ndarray) -> np.ndarray:
    return np.asarray(images, dtype=np.float64).reshape(len(images), -1)


class TestFitGaussian:
    """Test fit_gaussian"""

    def test_two_points(self):
        """Test hand arithmetic for (0,0) and (2,0)"""
        stats = MetricsService.fit_gaussian(np.array([[0.0, 0.0], [2.0, 0.0]]))

        np.testing.assert_allclose(stats.mean, [1.0, 0.0])
        np.testing.assert_allclose(stats.covariance, [[2.0, 0.0], [0.0, 0.0]])
        assert stats.count == 2

    def test_repeated_point(self):
        """Test copies of one point have zero covariance"""
        stats = MetricsService.fit_gaussian(np.tile([1.0, -2.0, 3.0], (10, 1)))

        np.testing.assert_allclose(stats.covariance, np.zeros((3, 3)), atol=1e-15)

    def test_matches_two_pass(self, rng):
        """Test a random 100 x 5 sample against a naive two-pass computation"""
        features = rng.normal(size=(100, 5))

        stats = MetricsService.fit_gaussian(features)

        mean = features.sum(axis=0) / 100
        covariance = np.zeros((5, 5))
        for row in features:
            covariance += np.outer(row - mean, row - mean)
        covariance /= 99
        np.testing.assert_allclose(stats.mean, mean, atol=1e-10)
        np.testing.assert_allclose(stats.covariance, covariance, atol=1e-10)

    def test_needs_two_samples(self):
        """Test a single sample is rejected"""
        with pytest.raises(ValueError, match="at least 2"):
            MetricsService.fit_gaussian(np.zeros((1, 3)))


class TestFrechetDistance:
    """Test frechet_distance"""

    def test_identical(self, rng):
        """Test a = b gives 0"""
        stats = MetricsService.fit_gaussian(rng.normal(size=(50, 4)))

        assert MetricsService.frechet_distance(stats, stats) == pytest.approx(0.0, abs=1e-8)

    def test_one_dimensional(self):
        """Test (mu1 - mu2)^2 + (sigma1 - sigma2)^2 = 2"""
        a = FeatureStats(mean=np.array([0.0]), covariance=np.array([[1.0]]), count=2)
        b = FeatureStats(mean=np.array([1.0]), covariance=np.array([[4.0]]), count=2)

        assert MetricsService.frechet_distance(a, b) == pytest.approx(2.0, abs=1e-8)

    def test_diagonal(self):
        """Test the diagonal closed form sum (sqrt(la) - sqrt(lb))^2"""
        a = FeatureStats(mean=np.zeros(2), covariance=np.diag([1.0, 2.0]), count=2)
        b = FeatureStats(mean=np.zeros(2), covariance=np.diag([4.0, 2.0]), count=2)

        assert MetricsService.frechet_distance(a, b) == pytest.approx(1.0, abs=1e-8)

    def test_symmetric(self, rng):
        """Test d(a, b) = d(b, a)"""
        a = MetricsService.fit_gaussian(rng.normal(size=(40, 3)))
        b = MetricsService.fit_gaussian(rng.normal(1.0, 2.0, size=(40, 3)))

        assert MetricsService.frechet_distance(a, b) == pytest.approx(MetricsService.frechet_distance(b, a), abs=1e-6)

    def test_rotation_invariant(self, rng):
        """Test an orthogonal change of basis leaves the distance unchanged"""
        x = rng.normal(size=(60, 4))
        y = rng.normal(0.5, 1.5, size=(60, 4))
        q = ortho_group.rvs(4, random_state=7)

        before = MetricsService.frechet_distance(MetricsService.fit_gaussian(x), MetricsService.fit_gaussian(y))
        after = MetricsService.frechet_distance(MetricsService.fit_gaussian(x @ q), MetricsService.fit_gaussian(y @ q))

        assert after == pytest.approx(before, abs=1e-6)

    def test_dimension_mismatch(self):
        """Test differing feature dimensions"""
        a = FeatureStats(mean=np.zeros(2), covariance=np.eye(2), count=2)
        b = FeatureStats(mean=np.zeros(3), covariance=np.eye(3), count=2)

        with pytest.raises(ValueError, match="mismatch"):
            MetricsService.frechet_distance(a, b)

    def test_round_off_negative_eigenvalue_clipped(self):
        """Test a -1e-3 eigenvalue next to a 1e6 one is round-off, clipped relative to the scale"""
        stats = FeatureStats(mean=np.zeros(2), covariance=np.diag([1e6, -1e-3]), count=2)

        assert MetricsService.frechet_distance(stats, stats) == pytest.approx(0.0, abs=1e-2)
        with pytest.raises(ValueError, match="semi-definite"):
            FeatureStats(mean=np.zeros(2), covariance=np.diag([1.0, -1e-3]), count=2)

    def test_rejects_non_psd(self):
        """Test feature stats refuse indefinite covariances"""
        with pytest.raises(ValueError, match="semi-definite"):
            FeatureStats(mean=np.zeros(2), covariance=np.array([[1.0, 0.0], [0.0, -1.0]]), count=2)


class TestComputeFid:
    """Test compute_fid"""

    def test_same_set(self, rng):
        """Test samples equal to the reference"""
        images = rng.uniform(-1, 1, size=(30, 2, 2, 3))

        assert MetricsService.compute_fid(images, images, flatten) == pytest.approx(0.0, abs=1e-6)

    def test_split_halves_below_noise(self, rng):
        """Test two halves of one distribution are much closer than uniform noise"""
        base = rng.normal(0.0, 0.2, size=(2000, 2, 2, 3)).clip(-1, 1)
        noise = rng.uniform(-1, 1, size=(1000, 2, 2, 3))

        halves = MetricsService.compute_fid(base[:1000], base[1000:], flatten)
        against_noise = MetricsService.compute_fid(noise, base[:1000], flatten)

        assert halves > 0.0
        assert against_noise > 10 * halves

    def test_empty_inputs(self):
        """Test empty sample sets are rejected"""
        with pytest.raises(ValueError):
            MetricsService.compute_fid(np.zeros((0, 2, 2, 3)), np.zeros((3, 2, 2, 3)), flatten)


class TestInceptionScore:
    """Test inception_score_from_probs"""

    def test_uniform_classifier(self):
        """Test uniform outputs give IS = 1"""
        probs = np.full((20, 4), 0.25)

        mean, std = MetricsService.inception_score_from_probs(probs, splits=2)

        assert mean == pytest.approx(1.0)
        assert std == pytest.approx(0.0)

    def test_confident_balanced(self):
        """Test one-hot outputs spread evenly over K classes give IS = K"""
        probs = np.tile(np.eye(5), (4, 1))

        mean, _ = MetricsService.inception_score_from_probs(probs, splits=1)

        assert mean == pytest.approx(5.0)

    def test_hand_computed_table(self):
        """Test four samples against explicit KL sums"""
        probs = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        marginal = probs.mean(axis=0)
        kls = [
            math.log(1.0 / marginal[0]),
            math.log(1.0 / marginal[0]),
            math.log(1.0 / marginal[1]),
            0.5 * math.log(0.5 / marginal[0]) + 0.5 * math.log(0.5 / marginal[1]),
        ]

        mean, std = MetricsService.inception_score_from_probs(probs, splits=1)

        assert mean == pytest.approx(math.exp(sum(kls) / 4), rel=1e-12)
        assert std == 0.0

    def test_classifier_wrapper(self):
        """Test inception_score applies the classifier to the samples"""
        samples = np.zeros((6, 2, 2, 3))

        mean, _ = MetricsService.inception_score(samples, lambda x: np.tile(np.eye(3), (2, 1)), splits=1)

        assert mean == pytest.approx(3.0)

    def test_unnormalised_rejected(self):
        """Test rows must sum to one"""
        with pytest.raises(ValueError, match="normalized"):
            MetricsService.inception_score_from_probs(np.array([[0.5, 0.2]]), splits=1)

    def test_too_many_splits(self):
        """Test splits larger than the sample count"""
        with pytest.raises(ValueError, match="splits"):
            MetricsService.inception_score_from_probs(np.full((3, 2), 0.5), splits=4)
