"""
Evaluation protocols built on sampling and the metrics: batched sampling with
guidance drawn from the training annotations, guidance-strength sweeps and
FID-based checkpoint selection.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch

from ...utils.performance_monitor import monitor_performance
from ..entities.checkpoint import DenoiserCheckpoint
from ..entities.feature_stats import FeatureStats
from ..entities.guidance import GuidanceBatch
from ..entities.noise_schedule import NoiseSchedule
from .diffusion_service import DiffusionService, NoisePredictor
from .metrics_service import FeatureFn, MetricsService

logger = logging.getLogger(__name__)

DenoiserFactory = Callable[[DenoiserCheckpoint], NoisePredictor]


def derive_seed(seed: int, index: int) -> int:
    """Independent seed for sub-task `index` of a run seeded with `seed`"""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def to_hwc(samples: torch.Tensor) -> np.ndarray:
    """(N, 3, H, W) tensor -> N x H x W x 3 float array"""
    return samples.detach().cpu().permute(0, 2, 3, 1).numpy().astype(np.float64)


@dataclass
class SamplingPlan:
    """Everything ddim_sample needs besides the network and the guidance"""
    schedule: NoiseSchedule
    num_steps: int
    image_shape: Tuple[int, int, int]
    sigma_mode: str = "zero"
    guidance_strength: float = 1.0
    batch_size: int = 100
    device: str = "cpu"


class EvaluationService:
    """Sampling-based evaluation"""

    @staticmethod
    def draw_guidance(pool: GuidanceBatch, count: int, seed: int) -> GuidanceBatch:
        """count rows drawn i.i.d. from the empirical distribution of training guidance"""
        rng = np.random.default_rng(seed)
        rows = torch.from_numpy(rng.integers(0, len(pool), size=count))
        return pool.index(rows)

    @staticmethod
    @monitor_performance("evaluation.sample")
    def sample_images(
        denoiser: NoisePredictor,
        guidance: GuidanceBatch,
        plan: SamplingPlan,
        seed: int,
        guidance_strength: Optional[float] = None,
    ) -> torch.Tensor:
        """
        One DDIM chain per guidance row, in mini-batches.

        All starting noise is drawn up front from `seed`, so the result does not
        depend on the mini-batch size when sigma is zero.
        """
        w = plan.guidance_strength if guidance_strength is None else guidance_strength
        count = len(guidance)
        x_T = torch.randn((count,) + tuple(plan.image_shape), generator=torch.Generator().manual_seed(seed))
        chunks = []
        for index, begin in enumerate(range(0, count, plan.batch_size)):
            rows = slice(begin, begin + plan.batch_size)
            chunks.append(DiffusionService.ddim_sample(
                denoiser,
                guidance.index(rows),
                num_steps=plan.num_steps,
                sigma_mode=plan.sigma_mode,
                guidance_strength=w,
                schedule=plan.schedule,
                image_shape=plan.image_shape,
                generator=torch.Generator().manual_seed(derive_seed(seed, index)),
                x_T=x_T[rows],
                device=plan.device,
            ).cpu())
        return torch.cat(chunks) if chunks else x_T

    @staticmethod
    def fid_against(samples: np.ndarray, reference_stats: FeatureStats, feature_fn: FeatureFn) -> float:
        return MetricsService.frechet_distance(MetricsService.fit_gaussian(feature_fn(samples)), reference_stats)

    @staticmethod
    def guidance_sweep(
        denoiser: NoisePredictor,
        w_values: Sequence[float],
        reference: np.ndarray,
        feature_fn: FeatureFn,
        num_samples: int,
        seed: int,
        guidance_pool: GuidanceBatch,
        plan: SamplingPlan,
    ) -> List[Tuple[float, float]]:
        """(w, FID) per requested w; point i samples with seed derived from (seed, i)"""
        if not w_values:
            raise ValueError("w_values must not be empty")
        reference_stats = MetricsService.fit_gaussian(feature_fn(reference))
        table = []
        for index, w in enumerate(w_values):
            point_seed = derive_seed(seed, index)
            guidance = EvaluationService.draw_guidance(guidance_pool, num_samples, point_seed)
            samples = EvaluationService.sample_images(denoiser, guidance, plan, point_seed, guidance_strength=w)
            fid = EvaluationService.fid_against(to_hwc(samples), reference_stats, feature_fn)
            logger.info(f"guidance sweep w={w:g}: FID {fid:.4f}")
            table.append((float(w), fid))
        return table

    @staticmethod
    def score_checkpoints(
        checkpoints: Sequence[DenoiserCheckpoint],
        reference: np.ndarray,
        feature_fn: FeatureFn,
        num_samples: int,
        denoiser_factory: DenoiserFactory,
        guidance_pool: GuidanceBatch,
        plan: SamplingPlan,
        seed: int = 0,
    ) -> List[float]:
        """FID of each checkpoint; every checkpoint sees the same noise and guidance draws"""
        reference_stats = MetricsService.fit_gaussian(feature_fn(reference))
        guidance = EvaluationService.draw_guidance(guidance_pool, num_samples, seed)
        scores = []
        for checkpoint in checkpoints:
            denoiser = denoiser_factory(checkpoint)
            samples = EvaluationService.sample_images(denoiser, guidance, plan, seed)
            scores.append(EvaluationService.fid_against(to_hwc(samples), reference_stats, feature_fn))
            logger.info(f"checkpoint epoch {checkpoint.epoch} step {checkpoint.step}: FID {scores[-1]:.4f}")
        return scores

    @staticmethod
    def select_checkpoint(
        checkpoints: Sequence[DenoiserCheckpoint],
        reference: np.ndarray,
        feature_fn: FeatureFn,
        num_samples: int,
        denoiser_factory: DenoiserFactory,
        guidance_pool: GuidanceBatch,
        plan: SamplingPlan,
        seed: int = 0,
    ) -> DenoiserCheckpoint:
        """Checkpoint with minimal FID; ties go to the earliest one"""
        if not checkpoints:
            raise ValueError("select_checkpoint needs at least one checkpoint")
        if len(checkpoints) == 1:
            return checkpoints[0]
        scores = EvaluationService.score_checkpoints(
            checkpoints, reference, feature_fn, num_samples, denoiser_factory, guidance_pool, plan, seed)
        best = 0
        for index, score in enumerate(scores):
            if score < scores[best]:
                best = index
        return checkpoints[best]
