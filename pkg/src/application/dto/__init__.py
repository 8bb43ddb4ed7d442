"""
Data Transfer Objects (DTOs) for application layer.
Requests carry the validated experiment config plus the paths and flags of one
command; responses carry what the command produced.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ...config.experiment_config import ExperimentConfig
from ...domain.entities.annotated_image import Box
from ...domain.entities.checkpoint import DenoiserCheckpoint
from ...domain.entities.guidance import GuidanceSource


@dataclass
class GenerateDataRequest:
    config: ExperimentConfig
    out_path: str
    unbalanced_max_per_class: Optional[int] = None


@dataclass
class GenerateDataResponse:
    path: str
    count: int
    summary: Dict[str, Any]


@dataclass
class AnnotateRequest:
    """source defaults to config.train.guidance_variant"""
    config: ExperimentConfig
    dataset_path: str
    out_path: str
    source: Optional[GuidanceSource] = None


@dataclass
class AnnotateResponse:
    path: str
    source: str
    count: int
    label_dim: int
    mask_channels: int
    num_clusters: Optional[int] = None
    nmi: Optional[float] = None
    mean_box_iou: Optional[float] = None
    corrupted: int = 0

    @classmethod
    def from_domain(cls, path: str, annotations) -> "AnnotateResponse":
        """Create DTO from the annotation set and its metadata"""
        meta = annotations.metadata
        return cls(
            path=path,
            source=annotations.source.value,
            count=len(annotations),
            label_dim=annotations.label_dim,
            mask_channels=annotations.mask_channels,
            num_clusters=meta.get("num_clusters"),
            nmi=meta.get("nmi"),
            mean_box_iou=meta.get("mean_box_iou"),
            corrupted=meta.get("corruption", {}).get("count", 0),
        )


@dataclass
class TrainRequest:
    config: ExperimentConfig
    dataset_path: str
    out_dir: str
    annotation_path: Optional[str] = None
    resume_path: Optional[str] = None


@dataclass
class CheckpointDTO:
    """Data transfer object for a written checkpoint"""
    path: str
    step: int
    epoch: int
    final_loss: Optional[float]

    @classmethod
    def from_domain(cls, path: str, checkpoint: DenoiserCheckpoint) -> "CheckpointDTO":
        trend = checkpoint.loss_trend
        return cls(
            path=path,
            step=checkpoint.step,
            epoch=checkpoint.epoch,
            final_loss=float(trend[-1]) if trend.size else None,
        )


@dataclass
class TrainResponse:
    checkpoints: List[CheckpointDTO]
    log_path: str
    budget_path: str
    wall_seconds: float
    best_path: Optional[str] = None

    @property
    def latest(self) -> Optional[CheckpointDTO]:
        return self.checkpoints[-1] if self.checkpoints else None


@dataclass
class SampleRequest:
    """
    Condition selection: cluster, box, segment_from or none of them (draw guidance
    from the training annotations). cluster may accompany box for box checkpoints.
    """
    config: ExperimentConfig
    checkpoint_path: str
    out_dir: str
    count: int = 16
    seed: int = 0
    w: Optional[float] = None
    cluster: Optional[int] = None
    box: Optional[Box] = None
    segment_from: Optional[int] = None
    annotation_path: Optional[str] = None
    use_ema: bool = True


@dataclass
class SampleResponse:
    grid_path: str
    sample_paths: List[str]
    guidance_strength: float
    condition: str


@dataclass
class EvaluateRequest:
    config: ExperimentConfig
    checkpoint_path: str
    dataset_path: str
    out_path: str
    metrics: List[str] = field(default_factory=lambda: ["fid"])
    annotation_path: Optional[str] = None
    w: Optional[float] = None


@dataclass
class EvaluateResponse:
    path: str
    metrics: Dict[str, Any]


@dataclass
class SweepRequest:
    """
    Exactly one mode: w_values (needs checkpoint_path), cluster_counts or
    corruption_fractions (annotate + train + evaluate per point).
    """
    config: ExperimentConfig
    dataset_path: str
    out_dir: str
    checkpoint_path: Optional[str] = None
    annotation_path: Optional[str] = None
    w_values: Optional[List[float]] = None
    cluster_counts: Optional[List[int]] = None
    corruption_fractions: Optional[List[float]] = None

    @property
    def mode(self) -> str:
        chosen = [name for name, value in (
            ("guidance", self.w_values),
            ("clusters", self.cluster_counts),
            ("corruption", self.corruption_fractions),
        ) if value is not None]
        if len(chosen) != 1:
            raise ValueError("choose exactly one sweep: w values, cluster counts or corruption fractions")
        return chosen[0]


@dataclass
class SweepResponse:
    mode: str
    rows: List[Dict[str, Any]]
    table_path: str
    report_path: str
    plot_paths: List[str]

    def column(self, name: str) -> List[Any]:
        return [row[name] for row in self.rows]


__all__ = [
    "GenerateDataRequest",
    "GenerateDataResponse",
    "AnnotateRequest",
    "AnnotateResponse",
    "TrainRequest",
    "CheckpointDTO",
    "TrainResponse",
    "SampleRequest",
    "SampleResponse",
    "EvaluateRequest",
    "EvaluateResponse",
    "SweepRequest",
    "SweepResponse",
]
