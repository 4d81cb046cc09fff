"""Defurnishing pipeline for equirectangular indoor panoramas.

Removes furniture from 360 panoramas: geometry pre-processing (pole crop,
roll, wrap-pad, downsample), inpainting/superresolution delegated to an HTTP
backend, and shadow-aware blending of the generated result back into the
original image. Ships a synthetic data generator, the training prompt set,
mock backends, and a PSNR/SSIM evaluation harness.
"""

from defurnish.errors import (
    BackendError,
    DefurnishError,
    DimensionError,
    PipelineStageError,
    ProtocolError,
    SynthesisError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "DefurnishError",
    "DimensionError",
    "PipelineStageError",
    "ProtocolError",
    "SynthesisError",
    "ValidationError",
    "__version__",
]
