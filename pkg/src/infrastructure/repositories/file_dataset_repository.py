"""
Binary corpus container.

Layout (little-endian): magic "SGDM-DATA-v1", u32 header length, JSON header
{config_echo, count}, then per image: u32 meta length, JSON meta, H*W*3 float32
pixels, and for images with a segmentation map u32 run count followed by
int16 run values and uint32 run lengths.
"""
import json
import logging
import struct
from pathlib import Path
from typing import BinaryIO, List, Optional

import numpy as np

from ...domain.entities.annotated_image import AnnotatedImage
from ...domain.exceptions import FileFormatError
from ...domain.repositories import DatasetRepository
from ...utils.atomic_io import atomic_write
from .run_length import decode_runs, encode_runs

logger = logging.getLogger(__name__)

DATA_MAGIC = b"SGDM-DATA-v1"
_U32 = struct.Struct("<I")


def read_exact(handle: BinaryIO, size: int, path: str, magic: bytes) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise FileFormatError(f"truncated {magic.decode()} file", path)
    return data


def read_magic(handle: BinaryIO, path: str, magic: bytes) -> None:
    found = handle.read(len(magic))
    if found != magic:
        raise FileFormatError(f"not a {magic.decode()} file (found {found[:16]!r})", path)


class FileDatasetRepository(DatasetRepository):
    """DatasetRepository backed by a single SGDM-DATA-v1 file"""

    def save(self, images: List[AnnotatedImage], path: str, config_echo: str = "{}") -> None:
        header = json.dumps({"config_echo": config_echo, "count": len(images)}).encode("utf-8")
        with atomic_write(path) as handle:
            handle.write(DATA_MAGIC)
            handle.write(_U32.pack(len(header)))
            handle.write(header)
            for image in images:
                self._write_image(handle, image)
        logger.info(f"Saved {len(images)} images to {path}")

    def _write_image(self, handle: BinaryIO, image: AnnotatedImage) -> None:
        meta = json.dumps({
            "id": image.id,
            "height": image.height,
            "width": image.width,
            "gt_label": image.gt_label,
            "gt_labels": list(image.gt_labels),
            "gt_boxes": [list(box) for box in image.gt_boxes],
            "num_classes": image.num_classes,
            "segmentation": image.gt_segmentation_map is not None,
        }).encode("utf-8")
        handle.write(_U32.pack(len(meta)))
        handle.write(meta)
        handle.write(np.ascontiguousarray(image.pixels, dtype="<f4").tobytes())
        if image.gt_segmentation_map is not None:
            values, lengths = encode_runs(image.gt_segmentation_map)
            handle.write(_U32.pack(values.size))
            handle.write(values.astype("<i2").tobytes())
            handle.write(lengths.astype("<u4").tobytes())

    def load(self, path: str) -> List[AnnotatedImage]:
        if not Path(path).is_file():
            raise FileNotFoundError(f"dataset file not found: {path}")
        with open(path, "rb") as handle:
            header = self._read_header(handle, path)
            images = [self._read_image(handle, path) for _ in range(header["count"])]
            if handle.read(1):
                raise FileFormatError(f"trailing bytes after {header['count']} records in {DATA_MAGIC.decode()} file",
                                      path)
        logger.debug(f"Loaded {len(images)} images from {path}")
        return images

    def read_config_echo(self, path: str) -> Optional[str]:
        with open(path, "rb") as handle:
            return self._read_header(handle, path).get("config_echo")

    @staticmethod
    def _read_header(handle: BinaryIO, path: str) -> dict:
        read_magic(handle, path, DATA_MAGIC)
        (length,) = _U32.unpack(read_exact(handle, _U32.size, path, DATA_MAGIC))
        try:
            return json.loads(read_exact(handle, length, path, DATA_MAGIC))
        except json.JSONDecodeError as e:
            raise FileFormatError(f"corrupt {DATA_MAGIC.decode()} header: {e}", path)

    @staticmethod
    def _read_image(handle: BinaryIO, path: str) -> AnnotatedImage:
        (length,) = _U32.unpack(read_exact(handle, _U32.size, path, DATA_MAGIC))
        meta = json.loads(read_exact(handle, length, path, DATA_MAGIC))
        h, w = meta["height"], meta["width"]
        pixels = np.frombuffer(read_exact(handle, h * w * 3 * 4, path, DATA_MAGIC), dtype="<f4").reshape(h, w, 3)

        segmentation = None
        if meta["segmentation"]:
            (runs,) = _U32.unpack(read_exact(handle, _U32.size, path, DATA_MAGIC))
            values = np.frombuffer(read_exact(handle, runs * 2, path, DATA_MAGIC), dtype="<i2")
            lengths = np.frombuffer(read_exact(handle, runs * 4, path, DATA_MAGIC), dtype="<u4")
            flat = decode_runs(values, lengths)
            if flat.size != h * w:
                raise FileFormatError(f"segmentation runs of image {meta['id']} do not cover {h}x{w}", path)
            segmentation = flat.reshape(h, w)

        return AnnotatedImage(
            id=meta["id"],
            pixels=pixels.astype(np.float32),
            gt_label=meta["gt_label"],
            gt_labels=tuple(meta["gt_labels"]),
            gt_boxes=[tuple(box) for box in meta["gt_boxes"]],
            gt_segmentation_map=segmentation,
            num_classes=meta["num_classes"],
        )
