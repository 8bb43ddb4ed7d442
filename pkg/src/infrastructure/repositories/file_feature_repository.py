"""
Precomputed feature container.

A file is a sequence of blocks, each: magic "SGDM-FEAT-v1", u64 count N, u32 dim C,
then N records {u64 id, C float32}. append() adds a block, so exports from an
offline backbone can be written incrementally.
"""
import logging
import struct
from pathlib import Path
from typing import BinaryIO, Dict

import numpy as np

from ...domain.exceptions import FileFormatError
from ...domain.repositories import FeatureRepository
from ...utils.atomic_io import atomic_write
from .file_dataset_repository import read_exact, read_magic

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"SGDM-FEAT-v1"
_BLOCK_HEADER = struct.Struct("<QI")


def _block(features: Dict[int, np.ndarray]) -> bytes:
    ids = sorted(features)
    dims = {np.asarray(features[i]).reshape(-1).shape[0] for i in ids}
    if len(dims) > 1:
        raise ValueError(f"inconsistent feature dimension: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    records = np.zeros(len(ids), dtype=[("id", "<u8"), ("vec", "<f4", (dim,))])
    for row, image_id in enumerate(ids):
        if image_id < 0:
            raise ValueError(f"image id {image_id} must be unsigned")
        records[row] = (image_id, np.asarray(features[image_id], dtype=np.float32).reshape(-1))
    return FEATURE_MAGIC + _BLOCK_HEADER.pack(len(ids), dim) + records.tobytes()


class FileFeatureRepository(FeatureRepository):
    """FeatureRepository backed by SGDM-FEAT-v1 files"""

    def save(self, features: Dict[int, np.ndarray], path: str) -> None:
        payload = _block(features)
        with atomic_write(path) as handle:
            handle.write(payload)
        logger.info(f"Saved {len(features)} feature vectors to {path}")

    def append(self, features: Dict[int, np.ndarray], path: str) -> None:
        if not Path(path).exists():
            self.save(features, path)
            return
        existing = self.load(path)
        clash = sorted(set(existing) & set(features))
        if clash:
            raise ValueError(f"duplicate image ids in feature file: {clash[:10]}")
        if existing and features:
            old_dim = next(iter(existing.values())).shape[0]
            new_dim = np.asarray(next(iter(features.values()))).reshape(-1).shape[0]
            if old_dim != new_dim:
                raise ValueError(f"inconsistent feature dimension: {old_dim} vs {new_dim}")
        previous = Path(path).read_bytes()
        with atomic_write(path) as handle:
            handle.write(previous)
            handle.write(_block(features))
        logger.info(f"Appended {len(features)} feature vectors to {path}")

    def load(self, path: str) -> Dict[int, np.ndarray]:
        if not Path(path).is_file():
            raise FileNotFoundError(f"feature file not found: {path}")
        features: Dict[int, np.ndarray] = {}
        dim = None
        with open(path, "rb") as handle:
            while handle.peek(1):
                block = self._read_block(handle, path)
                for image_id, vector in block.items():
                    if dim is not None and vector.shape[0] != dim:
                        raise FileFormatError(f"inconsistent feature dimension: {dim} vs {vector.shape[0]}", path)
                    dim = vector.shape[0]
                    if image_id in features:
                        raise FileFormatError(f"duplicate image id {image_id}", path)
                    features[image_id] = vector
        logger.debug(f"Loaded {len(features)} feature vectors from {path}")
        return features

    @staticmethod
    def _read_block(handle: BinaryIO, path: str) -> Dict[int, np.ndarray]:
        read_magic(handle, path, FEATURE_MAGIC)
        count, dim = _BLOCK_HEADER.unpack(read_exact(handle, _BLOCK_HEADER.size, path, FEATURE_MAGIC))
        dtype = np.dtype([("id", "<u8"), ("vec", "<f4", (dim,))])
        records = np.frombuffer(read_exact(handle, count * dtype.itemsize, path, FEATURE_MAGIC), dtype=dtype)
        return {int(r["id"]): np.array(r["vec"], dtype=np.float64) for r in records}
