"""
Unit tests for run-length coding.
"""
import numpy as np
import pytest

from src.infrastructure.repositories.run_length import decode_binary, decode_runs, encode_binary, encode_runs


def test_encode_runs():
    values, lengths = encode_runs(np.array([3, 3, 1, 1, 1, 3]))

    assert values.tolist() == [3, 1, 3]
    assert lengths.tolist() == [2, 3, 1]
    assert decode_runs(values, lengths).tolist() == [3, 3, 1, 1, 1, 3]


def test_encode_runs_empty():
    values, lengths = encode_runs(np.array([]))

    assert values.size == 0 and lengths.size == 0


@pytest.mark.parametrize("mask,counts", [
    ([[0, 0], [1, 1]], [2, 2]),
    ([[1, 0], [0, 1]], [0, 1, 2, 1]),
    ([[0, 0], [0, 0]], [4]),
])
def test_encode_binary(mask, counts):
    """Runs start with zeros, even when the first pixel is set"""
    assert encode_binary(np.array(mask)) == counts
    assert decode_binary(counts, (2, 2)).tolist() == np.array(mask, dtype=np.float32).tolist()


def test_decode_binary_wrong_total():
    with pytest.raises(ValueError, match="cover 3 pixels"):
        decode_binary([1, 2], (2, 2))
