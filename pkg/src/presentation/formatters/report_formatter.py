"""
Console formatters for command results.
"""
from typing import Any, Dict, List

from ...application.dto import (
    AnnotateResponse,
    EvaluateResponse,
    GenerateDataResponse,
    SampleResponse,
    SweepResponse,
    TrainResponse,
)


class ReportFormatter:
    """Formats use-case responses as short plain-text summaries"""

    def __init__(self, rule_width: int = 40):
        self.rule = "-" * rule_width

    def format_corpus(self, response: GenerateDataResponse) -> str:
        summary = response.summary
        lines = [f"Corpus: {response.path}", self.rule, f"images: {response.count}"]
        lines.append("class counts: " + " ".join(str(c) for c in summary["class_counts"]))
        lines.append("labels per image: " + ", ".join(
            f"{k}: {v}" for k, v in summary["labels_per_image"].items()))
        return "\n".join(lines)

    def format_annotations(self, response: AnnotateResponse) -> str:
        lines = [f"Annotations: {response.path}", self.rule,
                 f"source: {response.source}", f"records: {response.count}",
                 f"label_dim: {response.label_dim}", f"mask channels: {response.mask_channels}"]
        if response.num_clusters is not None:
            lines.append(f"clusters: {response.num_clusters}")
        if response.corrupted:
            lines.append(f"corrupted ids: {response.corrupted}")
        if response.nmi is not None:
            lines.append(f"NMI vs ground truth: {response.nmi:.4f}")
        if response.mean_box_iou is not None:
            lines.append(f"mean box IoU: {response.mean_box_iou:.4f}")
        return "\n".join(lines)

    def format_training(self, response: TrainResponse) -> str:
        lines = [f"Training: {len(response.checkpoints)} checkpoint(s)", self.rule]
        for checkpoint in response.checkpoints:
            loss = "-" if checkpoint.final_loss is None else f"{checkpoint.final_loss:.5f}"
            lines.append(f"epoch {checkpoint.epoch:>4} step {checkpoint.step:>8} loss {loss}  {checkpoint.path}")
        lines.append(f"wall time: {response.wall_seconds:.1f}s")
        if response.best_path:
            lines.append(f"best: {response.best_path}")
        return "\n".join(lines)

    def format_samples(self, response: SampleResponse) -> str:
        return (f"{len(response.sample_paths)} samples ({response.condition}, w={response.guidance_strength:g})\n"
                f"grid: {response.grid_path}")

    def format_metrics(self, response: EvaluateResponse) -> str:
        lines = [f"Report: {response.path}", self.rule]
        for name, value in response.metrics.items():
            if isinstance(value, dict):
                lines.append(f"{name}: {value['mean']:.4f} +- {value['std']:.4f}")
            else:
                lines.append(f"{name}: {value:.4f}")
        return "\n".join(lines)

    def format_sweep(self, response: SweepResponse) -> str:
        rows: List[Dict[str, Any]] = response.rows
        if not rows:
            return f"{response.mode} sweep: no rows"
        columns = list(rows[0].keys())
        lines = [f"{response.mode} sweep: {response.table_path}", self.rule, "  ".join(f"{c:>12}" for c in columns)]
        for row in rows:
            lines.append("  ".join(self._cell(row[c]) for c in columns))
        lines.append(f"plots: {', '.join(response.plot_paths)}")
        return "\n".join(lines)

    @staticmethod
    def _cell(value: Any) -> str:
        if value is None:
            return f"{'-':>12}"
        if isinstance(value, float):
            return f"{value:>12.4f}"
        return f"{value!s:>12}"
