"""
Feature extractors and the toy classifier.
"""
from .extractors import (
    ToyFeatureExtractor,
    ThumbnailFeatureExtractor,
    RawPatchExtractor,
    build_image_extractor,
    l2_normalize,
)
from .classifier import NearestCentroidClassifier

__all__ = [
    "ToyFeatureExtractor",
    "ThumbnailFeatureExtractor",
    "RawPatchExtractor",
    "build_image_extractor",
    "l2_normalize",
    "NearestCentroidClassifier",
]
