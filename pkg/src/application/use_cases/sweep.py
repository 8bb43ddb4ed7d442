"""
Use case for the comparative sweeps: FID against guidance strength for one
checkpoint, and FID against the number of clusters or the corruption fraction,
each point being a fresh annotate -> train -> evaluate run on a shared budget.
"""
import logging
from pathlib import Path
from typing import Any, Dict

from ..dto import (
    AnnotateRequest,
    EvaluateRequest,
    SweepRequest,
    SweepResponse,
    TrainRequest,
)
from ...config.experiment_config import ExperimentConfig, config_echo
from ...domain.entities.guidance import GuidanceSource
from ...domain.repositories import AnnotationRepository, CheckpointRepository, DatasetRepository
from ...domain.services import EvaluationService
from ...infrastructure.exporters import ReportWriter, plot_curve
from ...infrastructure.networks import load_denoiser
from .annotate import AnnotateUseCase
from .common import (
    annotation_pool,
    check_pool_fits,
    checkpoint_source,
    feature_function,
    images_to_array,
    make_schedule,
    sampling_plan,
)
from .evaluate import EvaluateUseCase
from .train_model import TrainModelUseCase

logger = logging.getLogger(__name__)

TABLE_NAME = "sweep.csv"
REPORT_NAME = "sweep.json"


class SweepUseCase:
    """Guidance-strength, cluster-count and corruption sweeps"""

    def __init__(
        self,
        dataset_repository: DatasetRepository,
        annotation_repository: AnnotationRepository,
        checkpoint_repository: CheckpointRepository,
        annotate_use_case: AnnotateUseCase,
        train_use_case: TrainModelUseCase,
        evaluate_use_case: EvaluateUseCase,
        report_writer: ReportWriter,
        version: str,
        device: str = "cpu",
    ):
        self.dataset_repository = dataset_repository
        self.annotation_repository = annotation_repository
        self.checkpoint_repository = checkpoint_repository
        self.annotate_use_case = annotate_use_case
        self.train_use_case = train_use_case
        self.evaluate_use_case = evaluate_use_case
        self.report_writer = report_writer
        self.version = version
        self.device = device

    def execute(self, request: SweepRequest) -> SweepResponse:
        mode = request.mode
        out_dir = Path(request.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        if mode == "guidance":
            rows, columns, plots = self._guidance_sweep(request, out_dir)
        elif mode == "clusters":
            rows, columns, plots = self._cluster_sweep(request, out_dir)
        else:
            rows, columns, plots = self._corruption_sweep(request, out_dir)

        echo = config_echo(request.config)
        table_path = self.report_writer.write_csv(rows, columns, str(out_dir / TABLE_NAME), echo)
        report_path = self.report_writer.write_json({"mode": mode, "rows": rows}, str(out_dir / REPORT_NAME), echo)
        return SweepResponse(mode=mode, rows=rows, table_path=table_path, report_path=report_path, plot_paths=plots)

    def _guidance_sweep(self, request: SweepRequest, out_dir: Path):
        if not request.w_values:
            raise ValueError("w list must not be empty")
        if any(w < 0 for w in request.w_values):
            raise ValueError("guidance strengths must be >= 0")
        if not request.checkpoint_path:
            raise ValueError("a guidance sweep needs a checkpoint")
        config = request.config

        checkpoint = self.checkpoint_repository.load(request.checkpoint_path)
        images = self.dataset_repository.load(request.dataset_path)
        annotations = None
        if checkpoint_source(checkpoint) != GuidanceSource.NONE:
            path = request.annotation_path or checkpoint.metadata.get("annotation_path")
            if not path:
                raise ValueError("guided checkpoints need the training annotation file (--annotations)")
            annotations = self.annotation_repository.load(path)
        pool = annotation_pool(annotations)
        check_pool_fits(checkpoint, pool)

        table = EvaluationService.guidance_sweep(
            load_denoiser(checkpoint, device=self.device),
            request.w_values,
            images_to_array(images),
            feature_function(config),
            config.evaluation.num_samples,
            config.evaluation.seed,
            pool,
            sampling_plan(config, make_schedule(config), self.device),
        )
        rows = [{"w": w, "fid": fid} for w, fid in table]
        plot = plot_curve(
            [r["w"] for r in rows], [r["fid"] for r in rows], str(out_dir / "fid_vs_w.png"),
            xlabel="guidance strength w", caption=self.version,
        )
        return rows, ["w", "fid"], [plot]

    def _cluster_sweep(self, request: SweepRequest, out_dir: Path):
        counts = request.cluster_counts
        if not counts or any(k < 1 for k in counts):
            raise ValueError("cluster counts must be a non-empty list of positive ints")
        rows = []
        for K in counts:
            config = request.config.model_copy(deep=True)
            config.annotation.num_clusters = K
            row = self._annotate_train_evaluate(request, config, out_dir / f"k_{K}")
            rows.append({"num_clusters": K, **row})
        plots = [
            plot_curve([r["num_clusters"] for r in rows], [r["fid"] for r in rows], str(out_dir / "fid_vs_k.png"),
                       xlabel="number of clusters K", caption=self.version, log_x=True),
        ]
        if all(r["nmi"] is not None for r in rows):
            plots.append(plot_curve(
                [r["nmi"] for r in rows], [r["fid"] for r in rows], str(out_dir / "fid_vs_nmi.png"),
                xlabel="NMI to ground truth", caption=self.version,
                annotations=[f"K={r['num_clusters']}" for r in rows],
            ))
        return rows, ["num_clusters", "nmi", "fid", "steps", "wall_seconds"], plots

    def _corruption_sweep(self, request: SweepRequest, out_dir: Path):
        fractions = request.corruption_fractions
        if not fractions or any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ValueError("corruption fractions must be a non-empty list in [0, 1]")
        rows = []
        for fraction in fractions:
            config = request.config.model_copy(deep=True)
            config.annotation.corrupt_fraction = fraction
            row = self._annotate_train_evaluate(request, config, out_dir / f"corrupt_{fraction:g}")
            rows.append({"corrupt_fraction": fraction, **row})
        plot = plot_curve(
            [r["corrupt_fraction"] for r in rows], [r["fid"] for r in rows], str(out_dir / "fid_vs_corruption.png"),
            xlabel="fraction of corrupted cluster ids", caption=self.version,
        )
        return rows, ["corrupt_fraction", "nmi", "fid", "steps", "wall_seconds"], [plot]

    def _annotate_train_evaluate(self, request: SweepRequest, config: ExperimentConfig, point_dir: Path) -> Dict[str, Any]:
        """One sweep point; every point trains under the same config budget"""
        config.train.guidance_variant = GuidanceSource.SELF_LABEL
        point_dir.mkdir(parents=True, exist_ok=True)
        annotation_path = str(point_dir / "annotations.jsonl")

        annotated = self.annotate_use_case.execute(AnnotateRequest(
            config=config,
            dataset_path=request.dataset_path,
            out_path=annotation_path,
            source=GuidanceSource.SELF_LABEL,
        ))
        trained = self.train_use_case.execute(TrainRequest(
            config=config,
            dataset_path=request.dataset_path,
            out_dir=str(point_dir),
            annotation_path=annotation_path,
        ))
        checkpoint_path = trained.best_path or trained.latest.path
        evaluated = self.evaluate_use_case.execute(EvaluateRequest(
            config=config,
            checkpoint_path=checkpoint_path,
            dataset_path=request.dataset_path,
            out_path=str(point_dir / "metrics.json"),
            metrics=["fid"],
            annotation_path=annotation_path,
        ))
        logger.info(f"Sweep point {point_dir.name}: NMI {annotated.nmi}, FID {evaluated.metrics['fid']:.4f}")
        return {
            "nmi": annotated.nmi,
            "fid": evaluated.metrics["fid"],
            "steps": trained.latest.step,
            "wall_seconds": trained.wall_seconds,
        }

