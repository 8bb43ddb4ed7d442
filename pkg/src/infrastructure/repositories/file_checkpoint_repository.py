"""
Checkpoint archives: one torch.save dict per file tagged with "SGDM-CKPT-v1".
"""
import logging
import re
from pathlib import Path
from typing import List

import torch

from ...domain.entities.checkpoint import CHECKPOINT_MAGIC, DenoiserCheckpoint
from ...domain.exceptions import FileFormatError
from ...domain.repositories import CheckpointRepository
from ...utils.atomic_io import atomic_write

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = re.compile(r"^step_(\d+)\.ckpt$")


def checkpoint_name(step: int) -> str:
    return f"step_{step:08d}.ckpt"


class FileCheckpointRepository(CheckpointRepository):
    """CheckpointRepository writing torch archives atomically"""

    def save(self, checkpoint: DenoiserCheckpoint, path: str) -> None:
        payload = {
            "magic": CHECKPOINT_MAGIC,
            "config": checkpoint.config,
            "params": checkpoint.params,
            "ema_params": checkpoint.ema_params,
            "step": checkpoint.step,
            "epoch": checkpoint.epoch,
            "optimizer_state": checkpoint.optimizer_state,
            "metadata": checkpoint.metadata,
            "epoch_state": checkpoint.epoch_state,
        }
        with atomic_write(path) as handle:
            torch.save(payload, handle)
        logger.info(f"Checkpoint step {checkpoint.step} (epoch {checkpoint.epoch}) written to {path}")

    def load(self, path: str) -> DenoiserCheckpoint:
        if not Path(path).is_file():
            raise FileNotFoundError(f"checkpoint not found: {path}")
        try:
            payload = torch.load(path, map_location="cpu", weights_only=True)
        except Exception as e:
            raise FileFormatError(f"not a readable {CHECKPOINT_MAGIC} archive: {e}", path)
        if not isinstance(payload, dict) or payload.get("magic") != CHECKPOINT_MAGIC:
            raise FileFormatError(f"not a {CHECKPOINT_MAGIC} archive", path)
        return DenoiserCheckpoint(
            config=payload["config"],
            params=payload["params"],
            ema_params=payload["ema_params"],
            step=payload["step"],
            epoch=payload["epoch"],
            optimizer_state=payload.get("optimizer_state"),
            metadata=payload.get("metadata", {}),
            epoch_state=payload.get("epoch_state"),
        )

    def list_checkpoints(self, directory: str) -> List[str]:
        """step_*.ckpt files of a run directory, oldest first"""
        root = Path(directory)
        if not root.is_dir():
            return []
        found = []
        for entry in root.iterdir():
            match = CHECKPOINT_NAME.match(entry.name)
            if match:
                found.append((int(match.group(1)), str(entry)))
        return [path for _, path in sorted(found)]
