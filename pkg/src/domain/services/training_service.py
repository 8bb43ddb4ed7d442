"""
Optimisation loop: per-image condition dropout, AdamW steps on the noise-prediction
loss, EMA shadowing and periodic checkpoint snapshots.
"""
import copy
import logging
import time
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import torch
from torch import nn

from ...utils.performance_monitor import monitor_performance
from ...utils.smart_logging import get_smart_logger
from ..entities.checkpoint import DenoiserCheckpoint
from ..entities.guidance import GuidanceBatch
from ..entities.noise_schedule import NoiseSchedule
from ..exceptions import TrainingDivergedError
from .diffusion_service import DiffusionService
from .guidance_service import GuidanceService

logger = logging.getLogger(__name__)
progress_logger = get_smart_logger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

CheckpointSink = Callable[[DenoiserCheckpoint], None]
LogSink = Callable[[Dict[str, Any]], None]


def epoch_seed(seed: int, epoch: int) -> int:
    """Independent stream per epoch so a resumed run replays the same batches"""
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


def snapshot(module: nn.Module) -> Dict[str, torch.Tensor]:
    return {name: tensor.detach().cpu().clone() for name, tensor in module.state_dict().items()}


class TrainingService:
    """Denoiser training"""

    @staticmethod
    def ema_update(
        shadow: Dict[str, torch.Tensor],
        params: Dict[str, torch.Tensor],
        decay: float,
    ) -> Dict[str, torch.Tensor]:
        """shadow <- decay * shadow + (1 - decay) * params, in place"""
        if not 0.0 <= decay <= 1.0:
            raise ValueError("decay must lie in [0, 1]")
        if set(shadow) != set(params):
            raise ValueError("shadow and params must hold the same tensors")
        with torch.no_grad():
            for name, value in params.items():
                target = shadow[name]
                if target.shape != value.shape:
                    raise ValueError(f"shape mismatch for {name}: {tuple(target.shape)} vs {tuple(value.shape)}")
                if not target.is_floating_point():
                    target.copy_(value)
                    continue
                target.copy_(decay * target + (1.0 - decay) * value.to(target.device, target.dtype))
        return shadow

    @staticmethod
    def train(
        denoiser: nn.Module,
        images: torch.Tensor,
        guidance: GuidanceBatch,
        schedule: NoiseSchedule,
        config,
        denoiser_config: Dict[str, Any],
        metadata: Optional[Dict[str, Any]] = None,
        resume: Optional[DenoiserCheckpoint] = None,
        on_checkpoint: Optional[CheckpointSink] = None,
        on_log: Optional[LogSink] = None,
        device: str = "cpu",
    ) -> List[DenoiserCheckpoint]:
        """
        Train `denoiser` on `images` (N, 3, H, W) with one guidance row per image.

        `config` is a TrainConfig. Checkpoints are emitted every
        checkpoint_every_epochs epochs, at the last epoch and when the wall-clock
        budget runs out; with epochs = 0 only the initialisation checkpoint exists.
        A budget that runs out inside an epoch leaves a checkpoint with an
        epoch_state, and resuming from it finishes that epoch on the same batches.
        """
        n = images.shape[0]
        if len(guidance) != n:
            raise ValueError(f"{len(guidance)} guidance rows for {n} images")
        if n == 0:
            raise ValueError("cannot train on an empty dataset")

        denoiser.to(device)
        denoiser.train()
        optimizer = torch.optim.AdamW(
            denoiser.parameters(),
            lr=config.learning_rate,
            betas=ADAM_BETAS,
            eps=ADAM_EPS,
            weight_decay=config.weight_decay,
        )
        metadata = dict(metadata or {})
        epoch_losses: List[float] = []
        step, start_epoch = 0, 0
        partial: Optional[Dict[str, Any]] = None

        if resume is not None:
            denoiser.load_state_dict(resume.params)
            if resume.optimizer_state is not None:
                optimizer.load_state_dict(resume.optimizer_state)
            ema = {k: v.clone().to(device) for k, v in resume.ema_params.items()}
            step, start_epoch = resume.step, resume.epoch
            epoch_losses = list(resume.loss_trend)
            partial = resume.epoch_state
            logger.info(f"Resuming from step {step}, epoch {start_epoch}"
                        + (f" at image {partial['rows']}" if partial else ""))
        else:
            ema = {k: v.detach().clone() for k, v in denoiser.state_dict().items()}

        def make_checkpoint(epoch: int, epoch_state: Optional[Dict[str, Any]] = None) -> DenoiserCheckpoint:
            checkpoint = DenoiserCheckpoint(
                config=copy.deepcopy(denoiser_config),
                params=snapshot(denoiser),
                ema_params={k: v.detach().cpu().clone() for k, v in ema.items()},
                step=step,
                epoch=epoch,
                optimizer_state=copy.deepcopy(optimizer.state_dict()),
                metadata={**metadata, "epoch_losses": list(epoch_losses)},
                epoch_state=epoch_state,
            )
            if on_checkpoint is not None:
                on_checkpoint(checkpoint)
            return checkpoint

        checkpoints: List[DenoiserCheckpoint] = []
        if resume is None:
            checkpoints.append(make_checkpoint(0))

        started = time.monotonic()
        images = images.to(device)
        guidance = guidance.to(device, dtype=images.dtype)

        for epoch in range(start_epoch, config.epochs):
            generator = torch.Generator().manual_seed(epoch_seed(config.seed, epoch))
            # dropout layers draw from the global stream
            torch.manual_seed(epoch_seed(config.seed, epoch))
            order = torch.randperm(n, generator=generator)
            rows_done, losses = 0, []
            if partial is not None:
                generator.set_state(partial["generator"])
                torch.set_rng_state(partial["torch_rng"])
                rows_done, losses = int(partial["rows"]), list(partial["losses"])
                partial = None

            step, rows_done, out_of_budget = TrainingService._run_epoch(
                denoiser, optimizer, ema, images, guidance, schedule, config,
                generator, order, rows_done, losses, epoch, step, started, on_log,
            )
            if rows_done < n:
                checkpoints.append(make_checkpoint(epoch, {
                    "rows": rows_done,
                    "losses": list(losses),
                    "generator": generator.get_state(),
                    "torch_rng": torch.get_rng_state(),
                }))
                logger.warning(f"Wall-clock budget of {config.max_wall_seconds}s exhausted at step {step}, "
                               f"{rows_done}/{n} images into epoch {epoch + 1}")
                break

            mean_loss = float(np.mean(losses))
            epoch_losses.append(mean_loss)
            logger.info(f"Epoch {epoch + 1}/{config.epochs} done, mean loss {mean_loss:.5f}")
            finished = epoch + 1
            if on_log is not None:
                on_log({"step": step, "epoch": finished, "epoch_loss": mean_loss,
                        "wall_time": time.monotonic() - started})
            if finished % config.checkpoint_every_epochs == 0 or finished == config.epochs or out_of_budget:
                checkpoints.append(make_checkpoint(finished))
            if out_of_budget:
                logger.warning(f"Wall-clock budget of {config.max_wall_seconds}s exhausted after epoch {finished}")
                break

        return checkpoints

    @staticmethod
    @monitor_performance("train.epoch")
    def _run_epoch(
        denoiser, optimizer, ema, images, guidance, schedule, config,
        generator, order, rows_done, losses, epoch, step, started, on_log,
    ):
        """Batches of `order` from image rows_done on; appends to `losses`, returns the new position"""
        n = images.shape[0]
        out_of_budget = False
        for begin in range(rows_done, n, config.batch_size):
            rows = order[begin:begin + config.batch_size].to(images.device)
            batch_guidance = GuidanceService.drop_condition_batch(guidance.index(rows), config.p_uncond, generator)
            loss = DiffusionService.training_loss(denoiser, images[rows], batch_guidance, schedule, generator)
            value = float(loss.detach())
            if not np.isfinite(value):
                raise TrainingDivergedError(step=step, epoch=epoch, loss=value)

            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            TrainingService.ema_update(ema, denoiser.state_dict(), config.ema_decay)
            step += 1
            losses.append(value)
            rows_done = min(begin + config.batch_size, n)

            elapsed = time.monotonic() - started
            if on_log is not None and step % config.log_every_steps == 0:
                on_log({
                    "step": step,
                    "epoch": epoch,
                    "loss": value,
                    "lr": optimizer.param_groups[0]["lr"],
                    "wall_time": elapsed,
                })
            progress_logger.info_throttled("train.progress", f"step {step} epoch {epoch} loss {value:.5f}")
            if config.max_wall_seconds is not None and elapsed >= config.max_wall_seconds:
                out_of_budget = True
                break
        return step, rows_done, out_of_budget
