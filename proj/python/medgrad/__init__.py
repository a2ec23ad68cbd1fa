"""CLIP-style dermoscopy toy model with entropy-weighted gradient saliency."""

from ._core import (
    ExplainConfig,
    MedgradError,
    Model,
    generate_dataset,
    local_entropy,
    read_image,
    run_cli,
)

__all__ = [
    "ExplainConfig",
    "MedgradError",
    "Model",
    "generate_dataset",
    "local_entropy",
    "read_image",
    "run_cli",
]
