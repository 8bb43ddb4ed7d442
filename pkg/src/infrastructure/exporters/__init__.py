"""
Output writers: PNG images, plots and reports.
"""
from .image_exporter import PngExporter, tile_grid, to_uint8, read_png_text
from .plot_exporter import plot_curve
from .report_writer import ReportWriter, TrainingLog, read_jsonl

__all__ = [
    "PngExporter",
    "tile_grid",
    "to_uint8",
    "read_png_text",
    "plot_curve",
    "ReportWriter",
    "TrainingLog",
    "read_jsonl",
]
