"""
Domain exception hierarchy.
Invariant violations on plain values raise ValueError; these cover the failures callers branch on.
"""
from typing import Optional


class SelfGuidedDiffusionError(Exception):
    """Base class for all toolkit errors"""


class FileFormatError(SelfGuidedDiffusionError):
    """Bad magic string, unsupported version or truncated container"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class GuidanceMismatchError(SelfGuidedDiffusionError):
    """Guidance variant does not fit the denoiser or the requested condition"""


class AnnotationCoverageError(SelfGuidedDiffusionError):
    """Annotations missing for some images, or dataset ids disagree"""


class TrainingDivergedError(SelfGuidedDiffusionError):
    """Non-finite loss encountered; training aborted"""

    def __init__(self, step: int, epoch: int, loss: float, timesteps: Optional[list] = None):
        self.step = step
        self.epoch = epoch
        self.loss = loss
        self.timesteps = timesteps or []
        super().__init__(
            f"non-finite loss {loss} at step {step} (epoch {epoch}); "
            f"batch timesteps={self.timesteps[:16]}"
        )
