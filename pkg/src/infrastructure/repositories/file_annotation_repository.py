"""
Annotation container: JSON lines. The first line is a header
{magic "SGDM-ANN-v1", source, label_dim, mask_channels, count, metadata};
every further line is one record {id, cluster, multi_hot, box, segmentation}
with masks stored as binary run lengths (segmentation: one run list per channel).
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ...domain.entities.annotation import AnnotationRecord, AnnotationSet
from ...domain.entities.guidance import GuidanceSource
from ...domain.exceptions import FileFormatError
from ...domain.repositories import AnnotationRepository
from ...utils.atomic_io import atomic_write
from .run_length import decode_binary, encode_binary

logger = logging.getLogger(__name__)

ANNOTATION_MAGIC = "SGDM-ANN-v1"


def _encode_record(record: AnnotationRecord) -> Dict[str, Any]:
    entry: Dict[str, Any] = {"id": record.image_id, "cluster": record.cluster}
    entry["multi_hot"] = None if record.multi_hot is None else np.flatnonzero(record.multi_hot).tolist()
    entry["multi_hot_dim"] = None if record.multi_hot is None else int(record.multi_hot.shape[0])
    entry["box"] = None if record.box_mask is None else {
        "shape": list(record.box_mask.shape),
        "runs": encode_binary(record.box_mask),
    }
    if record.segmentation is None:
        entry["segmentation"] = None
    else:
        h, w, k = record.segmentation.shape
        entry["segmentation"] = {
            "shape": [h, w, k],
            "runs": [encode_binary(record.segmentation[:, :, c]) for c in range(k)],
        }
    return entry


def _decode_record(entry: Dict[str, Any]) -> AnnotationRecord:
    multi_hot = None
    if entry.get("multi_hot") is not None:
        multi_hot = np.zeros(entry["multi_hot_dim"], dtype=np.float32)
        multi_hot[entry["multi_hot"]] = 1.0
    box_mask = None
    if entry.get("box") is not None:
        box_mask = decode_binary(entry["box"]["runs"], tuple(entry["box"]["shape"]))
    segmentation = None
    if entry.get("segmentation") is not None:
        h, w, k = entry["segmentation"]["shape"]
        channels = [decode_binary(runs, (h, w)) for runs in entry["segmentation"]["runs"]]
        segmentation = np.stack(channels, axis=-1) if channels else np.zeros((h, w, k), dtype=np.float32)
    return AnnotationRecord(
        image_id=int(entry["id"]),
        cluster=entry.get("cluster"),
        box_mask=box_mask,
        segmentation=segmentation,
        multi_hot=multi_hot,
    )


class FileAnnotationRepository(AnnotationRepository):
    """AnnotationRepository backed by SGDM-ANN-v1 JSON-lines files"""

    def save(self, annotations: AnnotationSet, path: str) -> None:
        header = {
            "magic": ANNOTATION_MAGIC,
            "source": annotations.source.value,
            "label_dim": annotations.label_dim,
            "mask_channels": annotations.mask_channels,
            "count": len(annotations),
            "metadata": annotations.metadata,
        }
        with atomic_write(path, mode="w", encoding="utf-8") as handle:
            handle.write(json.dumps(header, sort_keys=True) + "\n")
            for record in annotations:
                handle.write(json.dumps(_encode_record(record)) + "\n")
        logger.info(f"Saved {len(annotations)} {annotations.source.value} annotations to {path}")

    def load(self, path: str) -> AnnotationSet:
        if not Path(path).is_file():
            raise FileNotFoundError(f"annotation file not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            header = self._parse_line(handle.readline(), path)
            if not isinstance(header, dict) or header.get("magic") != ANNOTATION_MAGIC:
                raise FileFormatError(f"not a {ANNOTATION_MAGIC} file", path)
            annotations = AnnotationSet(
                source=GuidanceSource(header["source"]),
                label_dim=header["label_dim"],
                mask_channels=header["mask_channels"],
                metadata=header.get("metadata", {}),
            )
            for line in handle:
                if line.strip():
                    annotations.add(_decode_record(self._parse_line(line, path)))
        if len(annotations) != header["count"]:
            raise FileFormatError(
                f"truncated {ANNOTATION_MAGIC} file: {len(annotations)} of {header['count']} records", path)
        logger.debug(f"Loaded {len(annotations)} annotations from {path}")
        return annotations

    @staticmethod
    def _parse_line(line: str, path: str) -> Optional[Dict[str, Any]]:
        try:
            return json.loads(line)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"corrupt {ANNOTATION_MAGIC} line: {e}", path)
