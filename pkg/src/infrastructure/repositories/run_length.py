"""
Run-length coding shared by the dataset and annotation containers.
"""
from typing import List, Tuple

import numpy as np


def encode_runs(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Flat array -> (run values, run lengths)"""
    flat = np.asarray(values).reshape(-1)
    if flat.size == 0:
        return flat[:0], np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.concatenate([[True], flat[1:] != flat[:-1]]))
    lengths = np.diff(np.concatenate([starts, [flat.size]]))
    return flat[starts], lengths


def decode_runs(run_values: np.ndarray, run_lengths: np.ndarray) -> np.ndarray:
    return np.repeat(np.asarray(run_values), np.asarray(run_lengths, dtype=np.int64))


def encode_binary(mask: np.ndarray) -> List[int]:
    """Alternating run lengths of a binary mask, starting with a (possibly empty) run of zeros"""
    values, lengths = encode_runs(np.asarray(mask).reshape(-1) > 0.5)
    counts = lengths.tolist()
    if values.size and values[0]:
        counts.insert(0, 0)
    return counts


def decode_binary(counts: List[int], shape: Tuple[int, ...]) -> np.ndarray:
    values = np.arange(len(counts)) % 2
    flat = decode_runs(values, counts).astype(np.float32)
    if flat.size != int(np.prod(shape)):
        raise ValueError(f"run lengths cover {flat.size} pixels, expected {int(np.prod(shape))}")
    return flat.reshape(shape)
