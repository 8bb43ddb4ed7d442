"""
Diffusion process: forward noising, the noise-prediction objective, classifier-free
guidance mixing and the DDIM sampler.

Guidance convention: eps = (1 - w) * eps_uncond + w * eps_cond, so w = 0 is the
unconditional model, w = 1 the conditional one and w > 1 extrapolates.
"""
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from ..entities.guidance import GuidanceBatch
from ..entities.noise_schedule import NoiseSchedule

logger = logging.getLogger(__name__)

# eps_theta(x_t, t, guidance) -> predicted noise with the shape of x_t
NoisePredictor = Callable[[torch.Tensor, torch.Tensor, GuidanceBatch], torch.Tensor]
Timestep = Union[int, torch.Tensor]

SIGMA_TOLERANCE = 1e-12


def _as_timesteps(t: Timestep, batch: int, device) -> torch.Tensor:
    if isinstance(t, torch.Tensor) and t.dim() == 1:
        return t.to(device=device, dtype=torch.long)
    return torch.full((batch,), int(t), dtype=torch.long, device=device)


def _broadcast(values: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    return values.to(device=like.device, dtype=like.dtype).reshape((-1,) + (1,) * (like.dim() - 1))


class DiffusionService:
    """Numerics of the Gaussian diffusion process"""

    @staticmethod
    def make_linear_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
        """Linearly spaced betas; alphas and their cumulative products derived from them"""
        if T < 1:
            raise ValueError("T must be >= 1")
        if not 0.0 < beta_start <= beta_end < 1.0:
            raise ValueError("betas must satisfy 0 < beta_start <= beta_end < 1")
        if T == 1:
            betas = np.array([beta_start], dtype=np.float64)
        else:
            betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
        alphas = 1.0 - betas
        return NoiseSchedule(betas=betas, alphas=alphas, alpha_bars=np.cumprod(alphas))

    @staticmethod
    def forward_sample(x0: torch.Tensor, t: Timestep, eps: torch.Tensor, schedule: NoiseSchedule) -> torch.Tensor:
        """Closed-form q(x_t | x_0): sqrt(ab_t) x0 + sqrt(1 - ab_t) eps"""
        if x0.shape != eps.shape:
            raise ValueError(f"eps shape {tuple(eps.shape)} does not match x0 shape {tuple(x0.shape)}")
        if isinstance(t, torch.Tensor) and t.dim() == 1:
            if t.shape[0] != x0.shape[0]:
                raise ValueError("one timestep per batch element required")
            if t.min() < 0 or t.max() >= schedule.T:
                raise ValueError(f"timesteps outside [0, {schedule.T})")
            ab = torch.as_tensor(schedule.alpha_bars, dtype=torch.float64)[t.cpu()]
            return _broadcast(ab.sqrt(), x0) * x0 + _broadcast((1.0 - ab).sqrt(), x0) * eps
        ab = schedule.alpha_bar(int(t))
        return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps

    @staticmethod
    def training_loss(
        denoiser: NoisePredictor,
        x0: torch.Tensor,
        guidance: GuidanceBatch,
        schedule: NoiseSchedule,
        generator: Optional[torch.Generator] = None,
        t: Optional[torch.Tensor] = None,
        eps: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """Mean squared error between predicted and true noise, averaged over all elements"""
        batch = x0.shape[0]
        if t is None:
            t = torch.randint(0, schedule.T, (batch,), generator=generator)
        if eps is None:
            eps = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
        t = _as_timesteps(t, batch, x0.device)
        eps = eps.to(x0.device)
        x_t = DiffusionService.forward_sample(x0, t, eps, schedule)
        eps_hat = denoiser(x_t, t, guidance)
        if eps_hat.shape != eps.shape:
            raise ValueError(f"denoiser output {tuple(eps_hat.shape)} does not match noise {tuple(eps.shape)}")
        return torch.mean((eps_hat - eps) ** 2)

    @staticmethod
    def guided_epsilon(
        denoiser: NoisePredictor,
        x_t: torch.Tensor,
        t: Timestep,
        guidance: GuidanceBatch,
        w: float,
        batched: bool = True,
    ) -> torch.Tensor:
        """
        Classifier-free mixing (1 - w) * eps(x_t, t) + w * eps(x_t, t; k).

        The conditional and null inputs go through the network as one batch of 2B;
        at w = 0 or w = 1 only the branch that contributes is evaluated.
        """
        t = _as_timesteps(t, x_t.shape[0], x_t.device)
        null = guidance.null_like()
        if w == 0.0:
            return denoiser(x_t, t, null)
        if w == 1.0:
            return denoiser(x_t, t, guidance)
        if batched:
            both = denoiser(torch.cat([x_t, x_t]), torch.cat([t, t]), guidance.concat(null))
            cond, uncond = both.chunk(2)
        else:
            cond = denoiser(x_t, t, guidance)
            uncond = denoiser(x_t, t, null)
        return (1.0 - w) * uncond + w * cond

    @staticmethod
    def ddim_sigma(alpha_bar_t: float, alpha_bar_prev: float, eta: float) -> float:
        """eta = 0 gives the deterministic sampler, eta = 1 the DDPM-equivalent variance"""
        if eta == 0.0:
            return 0.0
        return eta * math.sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar_t)) * math.sqrt(
            max(0.0, 1.0 - alpha_bar_t / alpha_bar_prev))

    @staticmethod
    def ddim_step(
        x_t: torch.Tensor,
        eps_hat: torch.Tensor,
        t: int,
        t_prev: int,
        sigma_t: float,
        schedule: NoiseSchedule,
        noise: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """One non-Markovian DDIM transition from t to t_prev (t_prev = -1 is the clean image)"""
        if t_prev >= t:
            raise ValueError(f"t_prev {t_prev} must be < t {t}")
        if sigma_t < 0.0:
            raise ValueError("sigma_t must be >= 0")
        ab_t = schedule.alpha_bar(t)
        ab_prev = schedule.alpha_bar(t_prev)
        direction_var = 1.0 - ab_prev - sigma_t ** 2
        if direction_var < -SIGMA_TOLERANCE:
            raise ValueError(f"sigma_t^2 {sigma_t ** 2} exceeds 1 - alpha_bar_prev {1.0 - ab_prev}")
        x0_hat = (x_t - math.sqrt(1.0 - ab_t) * eps_hat) / math.sqrt(ab_t)
        out = math.sqrt(ab_prev) * x0_hat + math.sqrt(max(direction_var, 0.0)) * eps_hat
        if sigma_t > 0.0:
            if noise is None or noise.shape != x_t.shape:
                raise ValueError("sigma_t > 0 needs a noise tensor shaped like x_t")
            out = out + sigma_t * noise
        return out

    @staticmethod
    def timestep_subsequence(T: int, num_steps: int) -> np.ndarray:
        """Evenly spaced, strictly increasing timesteps ending at T - 1"""
        if not 1 <= num_steps <= T:
            raise ValueError(f"num_steps must lie in [1, {T}]")
        if num_steps == 1:
            return np.array([T - 1], dtype=np.int64)
        return np.round(np.linspace(0, T - 1, num_steps)).astype(np.int64)

    @staticmethod
    def ddim_sample(
        denoiser: NoisePredictor,
        guidance: GuidanceBatch,
        num_steps: int,
        sigma_mode: str,
        guidance_strength: float,
        schedule: NoiseSchedule,
        image_shape: Sequence[int],
        generator: Optional[torch.Generator] = None,
        x_T: Optional[torch.Tensor] = None,
        device: Union[str, torch.device] = "cpu",
        return_intermediates: bool = False,
    ) -> Union[torch.Tensor, Tuple[torch.Tensor, List[torch.Tensor]]]:
        """
        Run the DDIM chain from x_T ~ N(0, I) down to a clean sample.

        Clipping to [-1, 1] happens on the final output only.
        """
        if sigma_mode not in ("zero", "ddpm-equivalent"):
            raise ValueError(f"unknown sigma_mode {sigma_mode!r}")
        batch = len(guidance)
        if x_T is None:
            x_T = torch.randn((batch,) + tuple(image_shape), generator=generator)
        x = x_T.to(device)
        guidance = guidance.to(device, dtype=x.dtype)
        eta = 0.0 if sigma_mode == "zero" else 1.0
        steps = DiffusionService.timestep_subsequence(schedule.T, num_steps)[::-1]
        intermediates: List[torch.Tensor] = []

        with torch.no_grad():
            for i, t in enumerate(steps):
                t = int(t)
                t_prev = int(steps[i + 1]) if i + 1 < len(steps) else -1
                eps_hat = DiffusionService.guided_epsilon(denoiser, x, t, guidance, guidance_strength)
                sigma = DiffusionService.ddim_sigma(schedule.alpha_bar(t), schedule.alpha_bar(t_prev), eta)
                noise = None
                if sigma > 0.0:
                    noise = torch.randn(x.shape, generator=generator, dtype=x.dtype).to(device)
                x = DiffusionService.ddim_step(x, eps_hat, t, t_prev, sigma, schedule, noise)
                if return_intermediates:
                    intermediates.append(x.detach().cpu().clone())

        x = x.clamp(-1.0, 1.0)
        if return_intermediates:
            return x, intermediates
        return x
