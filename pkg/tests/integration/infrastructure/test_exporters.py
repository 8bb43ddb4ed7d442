"""
Integration tests for PNG, plot and report outputs.
"""
import json

import numpy as np
import pytest
from PIL import Image

from src.infrastructure.exporters import PngExporter, ReportWriter, TrainingLog, plot_curve, read_jsonl, read_png_text
from src.infrastructure.exporters.image_exporter import tile_grid, to_uint8

pytestmark = pytest.mark.integration


def test_to_uint8_mapping():
    assert to_uint8(np.array([-1.0, 0.0, 1.0, 2.0])).tolist() == [0, 128, 255, 255]


def test_tile_grid_layout():
    images = [np.full((2, 2, 3), v) for v in (0.0, 0.5, 1.0)]

    grid = tile_grid(images)

    assert grid.shape == (4, 4, 3)
    assert grid[0, 2, 0] == 0.5
    assert grid[3, 3, 0] == -1.0


def test_png_provenance(tmp_path):
    """Test PNG files carry the version and config echo"""
    exporter = PngExporter("1.2.3")

    paths = exporter.export_images([np.zeros((4, 4, 3))] * 2, str(tmp_path), '{"a":1}')

    assert [p.rsplit("/", 1)[-1] for p in paths] == ["sample_0000.png", "sample_0001.png"]
    assert read_png_text(paths[0]) == {"sgdm-version": "1.2.3", "sgdm-config": '{"a":1}'}
    with Image.open(paths[0]) as image:
        assert image.size == (4, 4) and image.mode == "RGB"


def test_grid_png(tmp_path):
    path = PngExporter("v").export_grid([np.zeros((4, 4, 3))] * 5, str(tmp_path / "grid.png"))

    with Image.open(path) as image:
        assert image.size == (12, 8)


def test_report_json(tmp_path):
    path = ReportWriter("v1").write_json({"fid": 2.5}, str(tmp_path / "r.json"), '{"seed":3}')

    document = json.loads(open(path).read())
    assert document["fid"] == 2.5
    assert document["provenance"] == {"version": "v1", "config": {"seed": 3}}


def test_report_csv(tmp_path):
    path = ReportWriter("v1").write_csv([{"w": 0.0, "fid": 1.0, "extra": 5}], ["w", "fid"],
                                        str(tmp_path / "t.csv"), "{}")

    assert open(path).read().splitlines() == ["# version: v1", "# config: {}", "w,fid", "0.0,1.0"]


def test_training_log(tmp_path):
    """Test the log starts with provenance and appends on resume"""
    path = str(tmp_path / "log.jsonl")
    with TrainingLog(path, "v1") as log:
        log({"step": 1, "loss": 0.5})
    with TrainingLog(path, "v1", append=True) as log:
        log({"step": 2, "loss": 0.4})

    records = read_jsonl(path)

    assert records[0]["provenance"]["version"] == "v1"
    assert [r["step"] for r in records[1:]] == [1, 2]


def test_plot_curve(tmp_path):
    path = plot_curve([0, 1, 2], [3.0, 2.0, 2.5], str(tmp_path / "p.png"), xlabel="w",
                      caption="v1", annotations=["a", "b", "c"], log_x=True)

    with Image.open(path) as image:
        assert image.format == "PNG"


def test_plot_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        plot_curve([0, 1], [1.0], str(tmp_path / "p.png"), xlabel="w")
