"""
Static sweep plots (matplotlib, Agg backend).
"""
import logging
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ...utils.atomic_io import atomic_write  # noqa: E402

logger = logging.getLogger(__name__)


def plot_curve(
    xs: Sequence[float],
    ys: Sequence[float],
    path: str,
    xlabel: str,
    ylabel: str = "FID",
    title: Optional[str] = None,
    caption: Optional[str] = None,
    log_x: bool = False,
    annotations: Optional[Sequence[str]] = None,
) -> str:
    """Line plot with markers; caption goes under the axes (the tool version, usually)"""
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have the same length")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    try:
        ax.plot(list(xs), list(ys), marker="o")
        if log_x:
            ax.set_xscale("symlog", linthresh=1.0)
        if annotations:
            for x, y, text in zip(xs, ys, annotations):
                ax.annotate(text, (x, y), textcoords="offset points", xytext=(4, 4), fontsize=8)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if caption:
            fig.text(0.01, 0.01, caption, fontsize=6, color="grey")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        with atomic_write(path) as handle:
            fig.savefig(handle, format="png", dpi=120)
    finally:
        plt.close(fig)
    logger.info(f"Plot written to {path}")
    return str(path)
