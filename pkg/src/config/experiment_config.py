"""
Experiment configuration schema.
One JSON document combines every section; unknown keys are rejected and every
field has a default, so `{}` is a valid (desk-scale) experiment.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..domain.entities.guidance import GuidanceSource

logger = logging.getLogger(__name__)

# Colours shapes are drawn with; class c uses shape c % 3 and colour c // 3
PALETTE_SIZE = 8


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ShapesConfig(_Section):
    """Synthetic corpus generator settings"""
    image_size: int = Field(32, ge=8)
    num_classes: int = Field(6, ge=1)
    shapes_per_image: List[int] = Field(default_factory=lambda: [1, 1])
    min_shape_size: int = Field(10, ge=3)
    max_shape_size: int = Field(22, ge=3)
    background: Literal["solid", "noise-texture"] = "solid"
    count: int = Field(4000, ge=1)
    seed: int = 0

    @field_validator("shapes_per_image")
    @classmethod
    def _check_range(cls, value: List[int]) -> List[int]:
        if len(value) != 2 or not 1 <= value[0] <= value[1]:
            raise ValueError("shapes_per_image must be [lo, hi] with 1 <= lo <= hi")
        return value

    @model_validator(mode="after")
    def _check_fit(self) -> "ShapesConfig":
        if self.num_classes > 3 * PALETTE_SIZE:
            raise ValueError(f"num_classes must be <= {3 * PALETTE_SIZE} (3 shapes x {PALETTE_SIZE} colours)")
        if self.min_shape_size > self.max_shape_size:
            raise ValueError("min_shape_size must be <= max_shape_size")
        if self.max_shape_size > self.image_size:
            raise ValueError(
                f"shapes too large to fit: max_shape_size {self.max_shape_size} > image_size {self.image_size}"
            )
        return self


class DiffusionConfig(_Section):
    """Linear beta schedule"""
    timesteps: int = Field(1000, ge=1)
    beta_start: float = 1e-4
    beta_end: float = 0.02

    @model_validator(mode="after")
    def _check_betas(self) -> "DiffusionConfig":
        if not 0.0 < self.beta_start <= self.beta_end < 1.0:
            raise ValueError("betas must satisfy 0 < beta_start <= beta_end < 1")
        return self


class DenoiserConfig(_Section):
    """UNet noise-prediction network"""
    image_size: int = Field(32, ge=4)
    in_channels: int = Field(3, ge=3)
    base_channels: int = Field(32, ge=1)
    channel_multipliers: List[int] = Field(default_factory=lambda: [1, 2, 4])
    blocks_per_resolution: int = Field(1, ge=1)
    attention_resolutions: List[int] = Field(default_factory=lambda: [4])
    num_heads: int = Field(8, ge=1)
    time_embedding_dim: int = Field(128, ge=1)
    sinusoid_dim: int = Field(512, ge=2)
    cond_embedding_dim: int = Field(256, ge=1)
    cond_mlp_layers: int = Field(2, ge=1)
    label_dim: int = Field(1, ge=1)
    dropout: float = Field(0.0, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_shapes(self) -> "DenoiserConfig":
        if not self.channel_multipliers or any(m < 1 for m in self.channel_multipliers):
            raise ValueError("channel_multipliers must be a non-empty list of positive ints")
        factor = 2 ** (len(self.channel_multipliers) - 1)
        if self.image_size % factor:
            raise ValueError(f"image_size {self.image_size} not divisible by {factor}")
        if self.sinusoid_dim % 2:
            raise ValueError("sinusoid_dim must be even")
        for level, mult in enumerate(self.channel_multipliers):
            if 2 ** level in self.attention_resolutions and (self.base_channels * mult) % self.num_heads:
                raise ValueError(
                    f"channels {self.base_channels * mult} at attention level {level} not divisible by num_heads"
                )
        return self

    @property
    def mask_channels(self) -> int:
        return self.in_channels - 3


class SamplerConfig(_Section):
    """DDIM sampler"""
    num_steps: int = Field(250, ge=1)
    sigma_mode: Literal["zero", "ddpm-equivalent"] = "zero"
    guidance_strength: float = Field(1.0, ge=0.0)
    sample_batch_size: int = Field(100, ge=1)


class TrainConfig(_Section):
    """Optimisation settings"""
    learning_rate: float = Field(3e-4, gt=0.0)
    batch_size: int = Field(64, ge=1)
    epochs: int = Field(30, ge=0)
    weight_decay: float = Field(0.01, ge=0.0)
    ema_decay: float = Field(0.995, ge=0.0, lt=1.0)
    p_uncond: float = Field(0.1, ge=0.0, le=1.0)
    checkpoint_every_epochs: int = Field(5, ge=1)
    seed: int = 0
    guidance_variant: GuidanceSource = GuidanceSource.NONE
    max_wall_seconds: Optional[float] = Field(None, gt=0.0)
    log_every_steps: int = Field(50, ge=1)


class AnnotationConfig(_Section):
    """Self-annotation pipeline"""
    num_clusters: int = Field(12, ge=1)
    kmeans_max_iters: int = Field(100, ge=1)
    kmeans_restarts: int = Field(5, ge=1)
    seed: int = 0
    feature_type: Literal["toy", "thumbnail", "precomputed"] = "toy"
    features_path: Optional[str] = None
    toy_histogram_bins: int = Field(16, ge=2)
    corrupt_fraction: float = Field(0.0, ge=0.0, le=1.0)
    corrupt_mode: Literal["permute", "resample"] = "permute"
    box_patch_size: int = Field(4, ge=1)
    box_threshold: float = 0.0
    box_refine_pixels: bool = True
    segment_patch_size: int = Field(2, ge=1)
    segment_clusters: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check_features(self) -> "AnnotationConfig":
        if self.feature_type == "precomputed" and not self.features_path:
            raise ValueError("feature_type precomputed requires features_path")
        return self


class EvaluationConfig(_Section):
    """Metric computation"""
    num_samples: int = Field(1000, ge=2)
    is_splits: int = Field(10, ge=1)
    w_values: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])
    metrics: List[str] = Field(default_factory=lambda: ["fid"])
    select_best: bool = False
    selection_samples: int = Field(250, ge=2)
    seed: int = 0

    @field_validator("w_values")
    @classmethod
    def _check_w(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("w_values must not be empty")
        if any(w < 0 for w in value):
            raise ValueError("guidance strengths must be >= 0")
        return value


class ExperimentConfig(_Section):
    """Whole experiment, echoed into every output for provenance"""
    data: ShapesConfig = Field(default_factory=ShapesConfig)
    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig)
    model: DenoiserConfig = Field(default_factory=DenoiserConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    annotation: AnnotationConfig = Field(default_factory=AnnotationConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    @model_validator(mode="after")
    def _check_cross_section(self) -> "ExperimentConfig":
        if self.sampler.num_steps > self.diffusion.timesteps:
            raise ValueError(
                f"sampler.num_steps {self.sampler.num_steps} exceeds diffusion.timesteps {self.diffusion.timesteps}"
            )
        if self.model.image_size != self.data.image_size:
            raise ValueError("model.image_size must equal data.image_size")
        return self


def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_experiment_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read a JSON config (optional), apply flag overrides, validate"""
    document: Dict[str, Any] = {}
    if path:
        text = Path(path).read_text(encoding="utf-8")
        document = json.loads(text) if text.strip() else {}
        if not isinstance(document, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        logger.debug(f"Loaded experiment config from {path}")
    if overrides:
        document = _deep_merge(document, overrides)
    return ExperimentConfig.model_validate(document)


def config_echo(config: BaseModel) -> str:
    """Canonical JSON of a config (sorted keys, no whitespace variance)"""
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
