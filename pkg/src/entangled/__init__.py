"""Selective-unlearning evaluation toolkit.

Core pieces: the Entangled metric family (paired and single-image), layered
editing (extract / merge / mask-out), dataset manifest tooling, a mock-backed
dataset-construction pipeline, and batch report generation.
"""

__version__ = "0.1.0"

from .imaging import ImagePlane, RegionMask, RegionSamples, load_image, load_mask, partition
from .metric import (
    DEFAULT_EPSILON,
    EntangledScore,
    MetricConfig,
    MetricWeights,
    combined_similarity,
    consistency,
    entangled_paired,
    entangled_single,
    region_rmse,
    region_stats,
)

__all__ = [
    "ImagePlane",
    "RegionMask",
    "RegionSamples",
    "load_image",
    "load_mask",
    "partition",
    "DEFAULT_EPSILON",
    "EntangledScore",
    "MetricConfig",
    "MetricWeights",
    "combined_similarity",
    "consistency",
    "entangled_paired",
    "entangled_single",
    "region_rmse",
    "region_stats",
    "__version__",
]
