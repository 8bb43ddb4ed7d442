"""
Denoiser checkpoint entity: raw and EMA parameters, config and progress counters.
"""
import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import torch

CHECKPOINT_MAGIC = "SGDM-CKPT-v1"


def parameter_hash(state: Dict[str, torch.Tensor]) -> str:
    """sha256 over parameter names, shapes and raw bytes"""
    digest = hashlib.sha256()
    for name in sorted(state):
        tensor = state[name].detach().cpu().contiguous()
        digest.update(name.encode("utf-8"))
        digest.update(str(tuple(tensor.shape)).encode("utf-8"))
        digest.update(str(tensor.dtype).encode("utf-8"))
        digest.update(tensor.numpy().tobytes())
    return digest.hexdigest()


@dataclass
class DenoiserCheckpoint:
    """
    Snapshot of training.

    config is the denoiser config as a plain dict; metadata carries the experiment
    echo, guidance source, annotation path and per-epoch loss trend.
    """

    config: Dict[str, Any]
    params: Dict[str, torch.Tensor]
    ema_params: Dict[str, torch.Tensor]
    step: int = 0
    epoch: int = 0  # completed epochs
    optimizer_state: Optional[Dict[str, Any]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    # set only when the snapshot was taken inside an epoch
    epoch_state: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        if self.step < 0 or self.epoch < 0:
            raise ValueError("step and epoch counters must be >= 0")
        if set(self.params) != set(self.ema_params):
            raise ValueError("EMA shadow must cover exactly the network parameters")
        for name, tensor in self.params.items():
            if tensor.shape != self.ema_params[name].shape:
                raise ValueError(f"EMA shadow shape mismatch for {name}")

    @property
    def params_hash(self) -> str:
        return parameter_hash(self.params)

    @property
    def ema_hash(self) -> str:
        return parameter_hash(self.ema_params)

    @property
    def loss_trend(self) -> np.ndarray:
        return np.asarray(self.metadata.get("epoch_losses", []), dtype=np.float64)
