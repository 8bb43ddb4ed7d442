"""
Pytest configuration and fixtures for testing.
"""
import copy
import os

import numpy as np
import pytest
import torch

from src.config.experiment_config import ExperimentConfig
from src.domain.entities.guidance import GuidanceSignal
from src.domain.services import DiffusionService, ShapesService


TINY_CONFIG = {
    "data": {"image_size": 8, "num_classes": 3, "count": 24, "min_shape_size": 4, "max_shape_size": 7},
    "diffusion": {"timesteps": 20},
    "model": {
        "image_size": 8,
        "base_channels": 8,
        "channel_multipliers": [1, 2],
        "attention_resolutions": [2],
        "num_heads": 2,
        "sinusoid_dim": 16,
        "time_embedding_dim": 16,
        "cond_embedding_dim": 16,
    },
    "sampler": {"num_steps": 4, "sample_batch_size": 8},
    "train": {"epochs": 1, "batch_size": 8, "checkpoint_every_epochs": 1, "log_every_steps": 1},
    "annotation": {"num_clusters": 3, "kmeans_restarts": 1, "segment_clusters": 2},
    "evaluation": {"num_samples": 8, "is_splits": 2, "selection_samples": 4, "w_values": [0.0, 1.0]},
}


def pytest_collection_modifyitems(config, items):
    """Acceptance runs take minutes; they only run when asked for"""
    if os.environ.get("SGDM_RUN_ACCEPTANCE") == "1":
        return
    skip = pytest.mark.skip(reason="set SGDM_RUN_ACCEPTANCE=1 to run")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def tiny_config():
    """Experiment small enough to train and sample in seconds on CPU"""
    return ExperimentConfig.model_validate(TINY_CONFIG)


@pytest.fixture
def tiny_corpus(tiny_config):
    """24 shape images of 8x8 pixels"""
    return ShapesService.generate_shapes(tiny_config.data)


@pytest.fixture
def small_schedule():
    return DiffusionService.make_linear_schedule(20, 1e-4, 0.02)


@pytest.fixture
def null_batch():
    """Factory for unconditional guidance batches"""
    def make(count: int, label_dim: int = 1):
        return GuidanceSignal.collate([GuidanceSignal.null(label_dim)] * count)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def torch_threads():
    """Keep torch single-threaded so tests are reproducible under xdist"""
    previous = torch.get_num_threads()
    torch.set_num_threads(1)
    yield
    torch.set_num_threads(previous)


@pytest.fixture(scope="session")
def tiny_config_document():
    """TINY_CONFIG as a JSON-ready dict"""
    return copy.deepcopy(TINY_CONFIG)
