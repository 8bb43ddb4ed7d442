"""
Condition dropout for classifier-free training.
"""
from typing import Optional

import numpy as np
import torch

from ..entities.guidance import GuidanceBatch, GuidanceSignal


class GuidanceService:
    """Replacing guidance by the null condition"""

    @staticmethod
    def drop_condition(guidance: GuidanceSignal, p_uncond: float, rng: np.random.Generator) -> GuidanceSignal:
        """With probability p_uncond return the null signal of matching shape, else the input"""
        if not 0.0 <= p_uncond <= 1.0:
            raise ValueError("p_uncond must lie in [0, 1]")
        if rng.random() < p_uncond:
            return guidance.nulled()
        return guidance

    @staticmethod
    def drop_condition_batch(
        batch: GuidanceBatch,
        p_uncond: float,
        generator: Optional[torch.Generator] = None,
    ) -> GuidanceBatch:
        """Per-image dropout on a collated batch; one Bernoulli draw per row"""
        if not 0.0 <= p_uncond <= 1.0:
            raise ValueError("p_uncond must lie in [0, 1]")
        if p_uncond == 0.0:
            return batch
        drop = torch.rand(len(batch), generator=generator) < p_uncond
        return batch.where_null(drop.to(batch.label.device))
