"""
Unit tests for ReportFormatter.
"""
from src.application.dto import (
    AnnotateResponse,
    CheckpointDTO,
    EvaluateResponse,
    GenerateDataResponse,
    SampleResponse,
    SweepResponse,
    TrainResponse,
)
from src.presentation.formatters.report_formatter import ReportFormatter


formatter = ReportFormatter(rule_width=10)


def test_format_corpus():
    response = GenerateDataResponse(path="d.sgds", count=3,
                                    summary={"class_counts": [1, 2], "labels_per_image": {"1": 3}})

    text = formatter.format_corpus(response)

    assert "images: 3" in text
    assert "class counts: 1 2" in text
    assert "-" * 10 in text


def test_format_annotations_optional_lines():
    bare = AnnotateResponse(path="a", source="gt-label", count=4, label_dim=3, mask_channels=0)
    full = AnnotateResponse(path="a", source="self-box", count=4, label_dim=3, mask_channels=1,
                            num_clusters=2, nmi=0.5, mean_box_iou=0.75, corrupted=1)

    assert "NMI" not in formatter.format_annotations(bare)
    text = formatter.format_annotations(full)
    assert "NMI vs ground truth: 0.5000" in text
    assert "mean box IoU: 0.7500" in text
    assert "corrupted ids: 1" in text


def test_format_training():
    response = TrainResponse(
        checkpoints=[CheckpointDTO("c0", 0, 0, None), CheckpointDTO("c1", 10, 1, 0.25)],
        log_path="log", budget_path="b", wall_seconds=2.0, best_path="best.ckpt")

    text = formatter.format_training(response)

    assert "2 checkpoint(s)" in text
    assert "loss -" in text and "loss 0.25000" in text
    assert "best: best.ckpt" in text


def test_format_samples():
    text = formatter.format_samples(SampleResponse("g.png", ["a", "b"], 1.5, "cluster 2"))

    assert text.startswith("2 samples (cluster 2, w=1.5)")


def test_format_metrics():
    text = formatter.format_metrics(EvaluateResponse("m.json", {"fid": 3.0, "is": {"mean": 2.0, "std": 0.1}}))

    assert "fid: 3.0000" in text
    assert "is: 2.0000 +- 0.1000" in text


def test_format_sweep():
    response = SweepResponse(mode="clusters", rows=[{"num_clusters": 2, "nmi": None, "fid": 1.5}],
                             table_path="t.csv", report_path="r.json", plot_paths=["p.png"])

    lines = formatter.format_sweep(response).splitlines()

    assert lines[0] == "clusters sweep: t.csv"
    assert lines[3].split() == ["2", "-", "1.5000"]
    assert lines[-1] == "plots: p.png"


def test_format_empty_sweep():
    response = SweepResponse(mode="guidance", rows=[], table_path="t", report_path="r", plot_paths=[])

    assert formatter.format_sweep(response) == "guidance sweep: no rows"
