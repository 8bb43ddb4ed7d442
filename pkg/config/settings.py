"""
Configuration Module
Process-level settings and logging for the self-guided diffusion toolkit
"""
import os
import logging
from logging.handlers import RotatingFileHandler
from typing import Optional

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env
load_dotenv()


class Settings(BaseSettings):
    """Process settings read from SGDM_* environment variables"""

    model_config = SettingsConfigDict(
        env_prefix="SGDM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Application settings
    app_name: str = Field("sgdm")
    app_version: str = Field("0.3.0")
    debug_mode: bool = Field(False)

    # Compute settings
    num_threads: int = Field(0, ge=0)  # 0 = leave torch/numpy defaults alone
    device: str = Field("auto")

    # Logging settings
    log_level: str = Field("INFO")
    log_file_path: str = Field("logs/sgdm.log")
    log_max_size: int = Field(10 * 1024 * 1024)  # 10MB
    log_backup_count: int = Field(5)

    @field_validator("device")
    @classmethod
    def _check_device(cls, value: str) -> str:
        if value not in ("auto", "cpu", "cuda"):
            raise ValueError(f"device must be one of auto, cpu, cuda (got {value!r})")
        return value

    @property
    def version_string(self) -> str:
        return f"{self.app_name} {self.app_version}"

    def resolve_device(self) -> str:
        """Concrete torch device name for this process"""
        if self.device != "auto":
            return self.device
        import torch
        return "cuda" if torch.cuda.is_available() else "cpu"

    def worker_count(self) -> int:
        """Pool size for embarrassingly parallel stages"""
        if self.num_threads > 0:
            return self.num_threads
        return max(1, min(8, os.cpu_count() or 1))


# Global settings instance
settings = Settings()


def setup_logging(log_file_path: Optional[str] = None) -> None:
    """Configure root logging with console and rotating file handlers"""
    path = log_file_path or settings.log_file_path

    log_dir = os.path.dirname(path)
    if log_dir and not os.path.exists(log_dir):
        os.makedirs(log_dir)

    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)

    file_handler = RotatingFileHandler(
        filename=path,
        maxBytes=settings.log_max_size,
        backupCount=settings.log_backup_count,
        encoding='utf-8'
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(formatter)

    root_logger.handlers.clear()
    root_logger.addHandler(console_handler)
    root_logger.addHandler(file_handler)

    # Third-party chatter
    logging.getLogger('matplotlib').setLevel(logging.WARNING)
    logging.getLogger('PIL').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(f"Logging configured - level {settings.log_level}, file {path}")


def apply_thread_limits() -> None:
    """Cap intra-op parallelism when SGDM_NUM_THREADS is set"""
    if settings.num_threads > 0:
        import torch
        torch.set_num_threads(settings.num_threads)


def get_settings() -> Settings:
    """
    Get settings instance

    Returns:
        Settings instance
    """
    return settings


def print_settings_info() -> None:
    """Print a short settings banner"""
    print("=" * 50)
    print(f"{settings.app_name} v{settings.app_version}")
    print("=" * 50)
    print(f"Debug Mode: {settings.debug_mode}")
    print(f"Log Level: {settings.log_level}")
    print(f"Log File: {settings.log_file_path}")
    print(f"Device: {settings.device}")
    print(f"Threads: {settings.num_threads or 'default'}")
    print("=" * 50)


if __name__ == "__main__":
    setup_logging()
    print_settings_info()
