"""
Guided UNet noise predictor.

Timestep: sinusoid (512) -> FC -> SiLU -> FC (128). Guidance: label (K+1) -> FC -> SiLU -> FC (256).
The concatenation [t_emb, g_emb] reaches every residual block through a per-block
affine map whose output is added after the block's first normalisation. Box and
segmentation masks are concatenated to x_t along channels before the first convolution.
"""
import logging
import math
from typing import List, Optional, Union

import torch
import torch.nn.functional as F
from torch import nn

from ...config.experiment_config import DenoiserConfig
from ...domain.entities.checkpoint import DenoiserCheckpoint
from ...domain.entities.guidance import GuidanceBatch
from ...domain.exceptions import GuidanceMismatchError

logger = logging.getLogger(__name__)

MAX_NORM_GROUPS = 32


def norm_groups(channels: int) -> int:
    """Largest divisor of channels not above 32"""
    return max(g for g in range(1, min(MAX_NORM_GROUPS, channels) + 1) if channels % g == 0)


def group_norm(channels: int) -> nn.GroupNorm:
    return nn.GroupNorm(norm_groups(channels), channels)


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Interleaved [sin(t f_0), cos(t f_0), sin(t f_1), ...] with geometric frequencies"""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64, device=t.device) / half)
    angles = t.to(torch.float64)[:, None] * freqs[None, :]
    return torch.stack([angles.sin(), angles.cos()], dim=-1).reshape(t.shape[0], dim)


class ResidualBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, emb_dim: int, dropout: float):
        super().__init__()
        self.norm1 = group_norm(in_channels)
        self.emb_proj = nn.Linear(emb_dim, in_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1)
        self.norm2 = group_norm(out_channels)
        self.dropout = nn.Dropout(dropout)
        self.conv2 = nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1)
        self.shortcut = (
            nn.Conv2d(in_channels, out_channels, kernel_size=1)
            if in_channels != out_channels
            else nn.Identity()
        )

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x) + self.emb_proj(emb)[:, :, None, None]
        h = self.conv1(F.silu(h))
        h = self.conv2(self.dropout(F.silu(self.norm2(h))))
        return h + self.shortcut(x)


class SelfAttention(nn.Module):
    """Pre-normalised multi-head self-attention over spatial positions, residual"""

    def __init__(self, channels: int, num_heads: int):
        super().__init__()
        self.norm = group_norm(channels)
        self.attn = nn.MultiheadAttention(channels, num_heads, batch_first=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        tokens = self.norm(x).reshape(b, c, h * w).transpose(1, 2)
        out, _ = self.attn(tokens, tokens, tokens, need_weights=False)
        return x + out.transpose(1, 2).reshape(b, c, h, w)


class Downsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, kernel_size=3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, kernel_size=3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class _Stage(nn.Module):
    """Residual block with optional attention"""

    def __init__(self, block: ResidualBlock, attention: Optional[SelfAttention]):
        super().__init__()
        self.block = block
        self.attention = attention

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        x = self.block(x, emb)
        return self.attention(x) if self.attention is not None else x


class GuidedUNet(nn.Module):
    """eps_theta(x_t, t; k) for the none / label / box / segmentation guidance variants"""

    def __init__(self, config: DenoiserConfig):
        super().__init__()
        self.config = config
        emb_dim = config.time_embedding_dim + config.cond_embedding_dim

        self.time_mlp = nn.Sequential(
            nn.Linear(config.sinusoid_dim, config.time_embedding_dim),
            nn.SiLU(),
            nn.Linear(config.time_embedding_dim, config.time_embedding_dim),
        )
        guidance_layers: List[nn.Module] = [nn.Linear(config.label_dim, config.cond_embedding_dim)]
        for _ in range(config.cond_mlp_layers - 1):
            guidance_layers += [nn.SiLU(), nn.Linear(config.cond_embedding_dim, config.cond_embedding_dim)]
        self.guidance_mlp = nn.Sequential(*guidance_layers)

        base = config.base_channels
        self.input_conv = nn.Conv2d(config.in_channels, base, kernel_size=3, padding=1)

        def stage(c_in: int, c_out: int, level: int) -> _Stage:
            attention = SelfAttention(c_out, config.num_heads) if 2 ** level in config.attention_resolutions else None
            return _Stage(ResidualBlock(c_in, c_out, emb_dim, config.dropout), attention)

        levels = len(config.channel_multipliers)
        self.down = nn.ModuleList()
        skip_channels = [base]
        channels = base
        for level, mult in enumerate(config.channel_multipliers):
            for _ in range(config.blocks_per_resolution):
                self.down.append(stage(channels, base * mult, level))
                channels = base * mult
                skip_channels.append(channels)
            if level != levels - 1:
                self.down.append(Downsample(channels))
                skip_channels.append(channels)

        self.mid = nn.ModuleList([stage(channels, channels, levels - 1), stage(channels, channels, levels - 1)])

        self.up = nn.ModuleList()
        for level, mult in reversed(list(enumerate(config.channel_multipliers))):
            for _ in range(config.blocks_per_resolution + 1):
                self.up.append(stage(channels + skip_channels.pop(), base * mult, level))
                channels = base * mult
            if level != 0:
                self.up.append(Upsample(channels))

        self.output = nn.Sequential(
            group_norm(channels),
            nn.SiLU(),
            nn.Conv2d(channels, 3, kernel_size=3, padding=1),
        )

    @property
    def mask_channels(self) -> int:
        return self.config.mask_channels

    def sinusoid(self, t: torch.Tensor) -> torch.Tensor:
        return sinusoidal_embedding(t, self.config.sinusoid_dim)

    def embed_timestep(self, t: torch.Tensor) -> torch.Tensor:
        dtype = self.input_conv.weight.dtype
        return self.time_mlp(self.sinusoid(t).to(dtype))

    def embed_guidance(self, label: torch.Tensor) -> torch.Tensor:
        if label.shape[-1] != self.config.label_dim:
            raise ValueError(f"label dim {label.shape[-1]} does not match denoiser label_dim {self.config.label_dim}")
        return self.guidance_mlp(label.to(self.input_conv.weight.dtype))

    def _network_input(self, x_t: torch.Tensor, guidance: GuidanceBatch) -> torch.Tensor:
        if x_t.shape[1] != 3:
            raise ValueError("x_t must have 3 channels")
        if self.mask_channels == 0:
            if guidance.mask is not None:
                raise GuidanceMismatchError("denoiser takes no spatial mask but guidance carries one")
            return x_t
        if guidance.mask is None:
            raise GuidanceMismatchError(f"denoiser expects a {self.mask_channels}-channel spatial mask")
        if guidance.mask.shape[1] != self.mask_channels:
            raise GuidanceMismatchError(
                f"mask has {guidance.mask.shape[1]} channels, denoiser expects {self.mask_channels}")
        if guidance.mask.shape[2:] != x_t.shape[2:]:
            raise ValueError(f"mask spatial shape {tuple(guidance.mask.shape[2:])} != image {tuple(x_t.shape[2:])}")
        return torch.cat([x_t, guidance.mask.to(x_t.dtype)], dim=1)

    def predict_noise(self, x_t: torch.Tensor, t: Union[int, torch.Tensor], guidance: GuidanceBatch) -> torch.Tensor:
        if not isinstance(t, torch.Tensor) or t.dim() == 0:
            t = torch.full((x_t.shape[0],), int(t), dtype=torch.long, device=x_t.device)
        if len(guidance) != x_t.shape[0]:
            raise ValueError(f"{len(guidance)} guidance rows for a batch of {x_t.shape[0]}")
        h = self.input_conv(self._network_input(x_t, guidance))
        emb = torch.cat([self.embed_timestep(t), self.embed_guidance(guidance.label)], dim=1)

        skips = [h]
        for module in self.down:
            h = module(h, emb) if isinstance(module, _Stage) else module(h)
            skips.append(h)
        for module in self.mid:
            h = module(h, emb)
        for module in self.up:
            if isinstance(module, _Stage):
                h = module(torch.cat([h, skips.pop()], dim=1), emb)
            else:
                h = module(h)
        return self.output(h)

    def forward(self, x_t: torch.Tensor, t: Union[int, torch.Tensor], guidance: GuidanceBatch) -> torch.Tensor:
        return self.predict_noise(x_t, t, guidance)


def build_denoiser(config: DenoiserConfig, seed: Optional[int] = None) -> GuidedUNet:
    """Fresh network; with a seed the initialisation is reproducible and leaves the global RNG untouched"""
    if seed is None:
        return GuidedUNet(config)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = GuidedUNet(config)
    logger.debug(f"Built denoiser with {sum(p.numel() for p in model.parameters())} parameters")
    return model


def load_denoiser(
    checkpoint: DenoiserCheckpoint,
    use_ema: bool = True,
    device: Union[str, torch.device] = "cpu",
) -> GuidedUNet:
    """Network in eval mode carrying the checkpoint's EMA (default) or raw parameters"""
    model = GuidedUNet(DenoiserConfig.model_validate(checkpoint.config))
    model.load_state_dict(checkpoint.ema_params if use_ema else checkpoint.params)
    return model.to(device).eval()
