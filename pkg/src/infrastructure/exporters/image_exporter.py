"""
8-bit PNG export with provenance text chunks.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from ...utils.atomic_io import atomic_write

logger = logging.getLogger(__name__)


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    """x -> round(255 * (x + 1) / 2), no gamma"""
    pixels = np.clip(np.asarray(pixels, dtype=np.float64), -1.0, 1.0)
    return np.round(255.0 * (pixels + 1.0) / 2.0).astype(np.uint8)


def tile_grid(images: Sequence[np.ndarray], ncols: Optional[int] = None, padding: int = 0) -> np.ndarray:
    """
    Row-major tiling of H x W x 3 images into one image.
    ncols defaults to ceil(sqrt(n)); unused cells stay black (-1).
    """
    if len(images) == 0:
        raise ValueError("tile_grid needs at least one image")
    h, w, c = np.asarray(images[0]).shape
    ncols = ncols or int(math.ceil(math.sqrt(len(images))))
    nrows = int(math.ceil(len(images) / ncols))
    grid = np.full((nrows * h + (nrows - 1) * padding, ncols * w + (ncols - 1) * padding, c), -1.0)
    for index, image in enumerate(images):
        row, col = divmod(index, ncols)
        y, x = row * (h + padding), col * (w + padding)
        grid[y:y + h, x:x + w] = image
    return grid


class PngExporter:
    """Writes images as PNG files carrying the config echo and tool version"""

    def __init__(self, version: str):
        self.version = version

    def _info(self, config_echo: str, extra: Optional[Dict[str, str]] = None) -> PngInfo:
        info = PngInfo()
        info.add_text("sgdm-version", self.version)
        info.add_text("sgdm-config", config_echo)
        for key, value in (extra or {}).items():
            info.add_text(key, str(value))
        return info

    def save_image(self, pixels: np.ndarray, path: str, config_echo: str = "{}",
                   extra: Optional[Dict[str, str]] = None) -> str:
        image = Image.fromarray(to_uint8(pixels), mode="RGB")
        with atomic_write(path) as handle:
            image.save(handle, format="PNG", pnginfo=self._info(config_echo, extra))
        return str(path)

    def export_images(self, images: Sequence[np.ndarray], directory: str, config_echo: str = "{}",
                      prefix: str = "sample") -> List[str]:
        """One file per image, named <prefix>_<index>.png"""
        Path(directory).mkdir(parents=True, exist_ok=True)
        width = max(4, len(str(max(len(images) - 1, 0))))
        paths = [
            self.save_image(image, str(Path(directory) / f"{prefix}_{index:0{width}d}.png"), config_echo)
            for index, image in enumerate(images)
        ]
        logger.info(f"Exported {len(paths)} images to {directory}")
        return paths

    def export_grid(self, images: Sequence[np.ndarray], path: str, config_echo: str = "{}",
                    ncols: Optional[int] = None) -> str:
        return self.save_image(tile_grid(images, ncols), path, config_echo)


def read_png_text(path: str) -> Dict[str, str]:
    with Image.open(path) as image:
        return dict(image.text)
