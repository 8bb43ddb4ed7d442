"""
Command-line interface.
One binary with subcommands; a JSON config file plus flag overrides (flags win).
Exit status: 0 success, 2 usage or validation error, 1 runtime failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from config.settings import get_settings

from ..application import (
    AnnotateRequest,
    EvaluateRequest,
    GenerateDataRequest,
    SampleRequest,
    SweepRequest,
    TrainRequest,
)
from ..config.container_config import ConfigFactory
from ..config.experiment_config import ExperimentConfig, load_experiment_config
from ..container import DependencyContainer, create_container
from ..domain.entities.guidance import GuidanceSource, GuidanceVariant
from ..domain.exceptions import GuidanceMismatchError
from .formatters.report_formatter import ReportFormatter
from .validators import CliValidators, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

VARIANTS = [source.value for source in GuidanceSource]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgdm", description="Self-guided diffusion on synthetic shapes")
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", help="experiment config (JSON)")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--out", required=True, help="output file or directory")
        return sub

    generate = command("generate-data", "generate the synthetic shapes corpus")
    generate.add_argument("--count", type=int, help="number of images")
    generate.add_argument("--unbalanced", type=int, metavar="MAX_PER_CLASS",
                          help="keep floor(c * MAX / C) images of class c")

    annotate = command("annotate", "self-annotate (or oracle-annotate) a corpus")
    annotate.add_argument("--data", required=True, help="dataset file")
    annotate.add_argument("--variant", choices=VARIANTS)
    annotate.add_argument("--clusters", type=int, metavar="K", help="number of clusters")
    annotate.add_argument("--feature-type", choices=["toy", "thumbnail", "precomputed"])
    annotate.add_argument("--features", help="precomputed feature file")
    annotate.add_argument("--corrupt", type=float, help="fraction of cluster ids to corrupt")
    annotate.add_argument("--corrupt-mode", choices=["permute", "resample"])

    train = command("train", "train a guided denoiser")
    train.add_argument("--data", required=True, help="dataset file")
    train.add_argument("--annotations", help="annotation file (guided variants)")
    train.add_argument("--variant", choices=VARIANTS)
    train.add_argument("--epochs", type=int)
    train.add_argument("--resume", help="checkpoint to resume from")

    sample = command("sample", "sample images from a checkpoint")
    sample.add_argument("--checkpoint", required=True)
    sample.add_argument("--w", type=float, help="guidance strength")
    sample.add_argument("--count", type=int, default=16)
    sample.add_argument("--cluster", type=int, help="fixed cluster id")
    sample.add_argument("--box", help="fixed box Y0,X0,Y1,X1 (end-exclusive)")
    sample.add_argument("--segment-from", type=int, metavar="ID", help="reuse the segmentation of this image")
    sample.add_argument("--annotations", help="training annotation file")
    sample.add_argument("--no-ema", action="store_true", help="use the raw weights")

    evaluate = command("evaluate", "score a checkpoint")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--data", required=True, help="reference dataset file")
    evaluate.add_argument("--metrics", help="comma-separated list of fid, is, nmi")
    evaluate.add_argument("--annotations", help="training annotation file")
    evaluate.add_argument("--w", type=float, help="guidance strength")
    evaluate.add_argument("--count", type=int, help="number of samples")

    sweep = command("sweep", "FID against w, cluster count or corruption fraction")
    sweep.add_argument("--data", required=True, help="dataset file")
    sweep.add_argument("--checkpoint", help="checkpoint for the guidance-strength sweep")
    sweep.add_argument("--annotations", help="training annotation file")
    modes = sweep.add_mutually_exclusive_group()
    modes.add_argument("--w-list", help="comma-separated guidance strengths")
    modes.add_argument("--sweep-clusters", help="comma-separated cluster counts")
    modes.add_argument("--sweep-corruption", help="comma-separated corruption fractions")
    return parser


def _set(overrides: Dict[str, Any], section: str, key: str, value: Any) -> None:
    if value is not None:
        overrides.setdefault(section, {})[key] = value


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Map flags onto the config sections they override"""
    overrides: Dict[str, Any] = {}
    command = args.command
    seed = getattr(args, "seed", None)

    if command == "generate-data":
        _set(overrides, "data", "count", args.count)
        _set(overrides, "data", "seed", seed)
    elif command == "annotate":
        _set(overrides, "annotation", "seed", seed)
        _set(overrides, "train", "guidance_variant", args.variant)
        _set(overrides, "annotation", "feature_type", args.feature_type)
        if args.features is not None:
            _set(overrides, "annotation", "features_path", args.features)
            if args.feature_type is None:
                _set(overrides, "annotation", "feature_type", "precomputed")
        _set(overrides, "annotation", "corrupt_fraction", args.corrupt)
        _set(overrides, "annotation", "corrupt_mode", args.corrupt_mode)
    elif command == "train":
        _set(overrides, "train", "seed", seed)
        _set(overrides, "train", "guidance_variant", args.variant)
        _set(overrides, "train", "epochs", args.epochs)
    elif command == "sample":
        _set(overrides, "sampler", "guidance_strength", args.w)
    elif command == "evaluate":
        _set(overrides, "evaluation", "seed", seed)
        _set(overrides, "evaluation", "num_samples", args.count)
        _set(overrides, "sampler", "guidance_strength", args.w)
    elif command == "sweep":
        for section in ("annotation", "train", "evaluation"):
            _set(overrides, section, "seed", seed)
    return overrides


def apply_cluster_count(args: argparse.Namespace, config: ExperimentConfig) -> ExperimentConfig:
    """K sets the segment clusters for segmentation variants, num_clusters otherwise"""
    if getattr(args, "clusters", None) is None:
        return config
    if config.train.guidance_variant.variant == GuidanceVariant.SEGMENTATION:
        config.annotation.segment_clusters = args.clusters
    else:
        config.annotation.num_clusters = args.clusters
    return config


class CommandRunner:
    """Runs one parsed command against the wired container"""

    def __init__(self, container: DependencyContainer, formatter: Optional[ReportFormatter] = None):
        self.container = container
        self.formatter = formatter or ReportFormatter()

    def run(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        handler = {
            "generate-data": self.generate_data,
            "annotate": self.annotate,
            "train": self.train,
            "sample": self.sample,
            "evaluate": self.evaluate,
            "sweep": self.sweep,
        }[args.command]
        return handler(args, config)

    def generate_data(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        response = self.container.get_use_case("generate_data").execute(GenerateDataRequest(
            config=config, out_path=args.out, unbalanced_max_per_class=args.unbalanced))
        return self.formatter.format_corpus(response)

    def annotate(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        source = GuidanceSource(args.variant) if args.variant else config.train.guidance_variant
        if source == GuidanceSource.NONE:
            raise UsageError("annotate needs a guided --variant")
        response = self.container.get_use_case("annotate").execute(AnnotateRequest(
            config=config, dataset_path=args.data, out_path=args.out, source=source))
        return self.formatter.format_annotations(response)

    def train(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        response = self.container.get_use_case("train").execute(TrainRequest(
            config=config, dataset_path=args.data, out_dir=args.out,
            annotation_path=args.annotations, resume_path=args.resume))
        return self.formatter.format_training(response)

    def sample(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        if args.count < 1:
            raise UsageError("--count must be >= 1")
        request = SampleRequest(
            config=config,
            checkpoint_path=args.checkpoint,
            out_dir=args.out,
            count=args.count,
            seed=args.seed if args.seed is not None else 0,
            w=args.w,
            cluster=args.cluster,
            box=CliValidators.parse_box(args.box),
            segment_from=args.segment_from,
            annotation_path=args.annotations,
            use_ema=not args.no_ema,
        )
        response = self.container.get_use_case("sample").execute(request)
        return self.formatter.format_samples(response)

    def evaluate(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        metrics = config.evaluation.metrics
        if args.metrics is not None:
            metrics = CliValidators.parse_list(args.metrics, str, "--metrics")
        CliValidators.require(CliValidators.validate_metrics(metrics))
        response = self.container.get_use_case("evaluate").execute(EvaluateRequest(
            config=config, checkpoint_path=args.checkpoint, dataset_path=args.data,
            out_path=args.out, metrics=metrics, annotation_path=args.annotations, w=args.w))
        return self.formatter.format_metrics(response)

    def sweep(self, args: argparse.Namespace, config: ExperimentConfig) -> str:
        request = SweepRequest(config=config, dataset_path=args.data, out_dir=args.out,
                               checkpoint_path=args.checkpoint, annotation_path=args.annotations)
        if args.sweep_clusters is not None:
            request.cluster_counts = CliValidators.parse_list(args.sweep_clusters, int, "--sweep-clusters")
            if any(k < 1 for k in request.cluster_counts):
                raise UsageError("cluster counts must be >= 1")
        elif args.sweep_corruption is not None:
            request.corruption_fractions = CliValidators.parse_list(
                args.sweep_corruption, float, "--sweep-corruption")
            CliValidators.require(CliValidators.validate_fractions(request.corruption_fractions))
        else:
            w_values: List[float] = config.evaluation.w_values
            if args.w_list is not None:
                w_values = CliValidators.parse_list(args.w_list, float, "--w-list")
            CliValidators.require(CliValidators.validate_w_list(w_values))
            if not args.checkpoint:
                raise UsageError("the guidance-strength sweep needs --checkpoint")
            request.w_values = w_values
        response = self.container.get_use_case("sweep").execute(request)
        return self.formatter.format_sweep(response)


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(args.config, config_overrides(args))
    return apply_cluster_count(args, config)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, run, map errors to exit statuses"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)

    # 1. Config (validation errors are usage errors)
    try:
        config = load_config(args)
    except ValidationError as e:
        print(f"invalid config:\n{e}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, ValueError) as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"config not found: {e}", file=sys.stderr)
        return EXIT_USAGE

    # 2. Run
    container = create_container(ConfigFactory.create_container_config(get_settings()))
    try:
        output = CommandRunner(container).run(args, config)
    except UsageError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"{args.command}: invalid value:\n{e}", file=sys.stderr)
        return EXIT_USAGE
    except GuidanceMismatchError as e:
        if args.command == "sample":
            print(f"sample: {e}", file=sys.stderr)
            return EXIT_USAGE
        logger.exception(f"{args.command} failed")
        return EXIT_FAILURE
    except Exception:
        logger.exception(f"{args.command} failed")
        return EXIT_FAILURE
    finally:
        container.cleanup()

    print(output)
    logger.debug(f"{args.command} finished, outputs under {Path(args.out)}")
    return EXIT_OK
