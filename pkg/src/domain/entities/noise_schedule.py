"""
Noise schedule entity: betas, alphas and cumulative alpha products indexed by timestep.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Fixed variance schedule of the forward process (float64 arrays of length T)"""

    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        T = self.T
        if T < 1:
            raise ValueError("schedule needs at least one timestep")
        if self.alphas.shape != (T,) or self.alpha_bars.shape != (T,):
            raise ValueError("betas, alphas and alpha_bars must share length T")
        if not np.all((self.betas > 0.0) & (self.betas < 1.0)):
            raise ValueError("betas must lie in (0, 1)")
        if not np.array_equal(self.alphas, 1.0 - self.betas):
            raise ValueError("alphas must equal 1 - betas exactly")
        if not np.all((self.alpha_bars > 0.0) & (self.alpha_bars < 1.0)):
            raise ValueError("alpha_bars must lie in (0, 1)")
        if T > 1 and not np.all(np.diff(self.alpha_bars) < 0.0):
            raise ValueError("alpha_bars must be strictly decreasing")

    @property
    def T(self) -> int:
        return int(self.betas.shape[0])

    def alpha_bar(self, t: int) -> float:
        """Cumulative product at t; t = -1 is the clean-image boundary with value 1"""
        if t == -1:
            return 1.0
        self.check_timestep(t)
        return float(self.alpha_bars[t])

    def check_timestep(self, t: int) -> None:
        if not 0 <= t < self.T:
            raise ValueError(f"timestep {t} outside [0, {self.T})")

    def to_dict(self) -> dict:
        return {"betas": self.betas.tolist()}
