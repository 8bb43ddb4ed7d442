"""
Neural network implementations.
"""
from .unet import GuidedUNet, build_denoiser, load_denoiser

__all__ = ["GuidedUNet", "build_denoiser", "load_denoiser"]
