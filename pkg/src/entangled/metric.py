"""The Entangled metric family: region similarity, statistical consistency,
and their weighted harmonic combination.

Two modes exist:

* paired ("Entangled-D"): original + unlearned image, combining inner/outer
  RMSE similarity with inner/outer statistical consistency;
* single ("Entangled-S"): unlearned image only, which reduces to the
  consistency term (alpha = 0).

All functions are pure over immutable inputs and safe to call concurrently.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .errors import (
    DegenerateMask,
    DimensionMismatch,
    EmptyRegion,
    LengthMismatch,
    NumericalError,
)
from .imaging import ImagePlane, RegionMask, partition

DEFAULT_EPSILON = 1e-6

# Final values may exceed [0, 1] only by accumulated rounding; anything past
# this window is treated as a genuine numerical fault, not clamped away.
CLAMP_WINDOW = 1e-9


@dataclasses.dataclass(frozen=True)
class MetricWeights:
    """Similarity/consistency weights; alpha + beta must equal 1."""

    alpha: float
    beta: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha + self.beta!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclasses.dataclass(frozen=True)
class MetricConfig:
    """Behavioral switches documented in the README.

    consistency_source: which image hosts the consistency statistics in
        paired mode. The artifact under evaluation ("unlearned") is the
        default; the original's consistency is constant across methods.
    uniform_region_consistency: opt-in; report V = 1 when both regions are
        flat (sigma < 1e-9). Default keeps the literal formula, which yields
        V = 0 in that case.
    grayscale: channel-mean the images before sampling instead of treating
        each channel value as an independent sample.
    """

    consistency_source: str = "unlearned"
    uniform_region_consistency: bool = False
    grayscale: bool = False

    def __post_init__(self):
        if self.consistency_source not in ("unlearned", "original"):
            raise ValueError(f"bad consistency_source: {self.consistency_source!r}")


DEFAULT_CONFIG = MetricConfig()


@dataclasses.dataclass(frozen=True)
class SimilarityBreakdown:
    s_inner: float
    s_outer: float
    combined: float


@dataclasses.dataclass(frozen=True)
class ConsistencyBreakdown:
    mu_inner: float
    mu_outer: float
    sigma_inner: float
    sigma_outer: float
    m: float
    v: float
    c: float


@dataclasses.dataclass(frozen=True)
class EntangledScore:
    similarity: Optional[SimilarityBreakdown]
    consistency: ConsistencyBreakdown
    weights: MetricWeights
    value: float
    mode: str  # "paired" | "single"
    flags: tuple = ()


def region_rmse(x: np.ndarray, y: np.ndarray) -> float:
    """Root mean squared elementwise difference between two sample vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"{x.size} vs {y.size} samples")
    if x.size == 0:
        raise EmptyRegion("RMSE over zero samples")
    d = x - y
    return float(np.sqrt(np.mean(d * d)))


def combined_similarity(s_inner: float, s_outer: float, eps: float = DEFAULT_EPSILON) -> float:
    """Harmonic-style combination of inner similarity and inverted outer similarity.

    Monotone increasing in s_inner, decreasing in s_outer; eps keeps the
    denominator positive so the function is total on [0,1]^2.
    """
    t = 1.0 - s_outer
    return 2.0 * s_inner * t / (s_inner + t + eps)


def region_stats(samples: np.ndarray) -> tuple:
    """Population mean and population standard deviation (1/N, not 1/(N-1))."""
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyRegion("statistics over zero samples")
    mu = float(arr.mean())
    sigma = float(np.sqrt(np.mean((arr - mu) ** 2)))
    return mu, sigma


def consistency(
    inner: np.ndarray,
    outer: np.ndarray,
    eps: float = DEFAULT_EPSILON,
    uniform_region_consistency: bool = False,
) -> ConsistencyBreakdown:
    """Statistical alignment of the two regions: C = M x V.

    M compares means, V compares standard deviations, each via the same
    bounded ratio 2ab/(a^2+b^2+eps). Two flat regions give V = 0 under the
    literal formula; the opt-in flag reports V = 1 instead.
    """
    mu_in, sg_in = region_stats(inner)
    mu_out, sg_out = region_stats(outer)
    m = 2.0 * mu_in * mu_out / (mu_in * mu_in + mu_out * mu_out + eps)
    if uniform_region_consistency and sg_in < 1e-9 and sg_out < 1e-9:
        v = 1.0
    else:
        v = 2.0 * sg_in * sg_out / (sg_in * sg_in + sg_out * sg_out + eps)
    return ConsistencyBreakdown(
        mu_inner=mu_in,
        mu_outer=mu_out,
        sigma_inner=sg_in,
        sigma_outer=sg_out,
        m=m,
        v=v,
        c=m * v,
    )


def _clamp(value: float, what: str) -> float:
    if value < -CLAMP_WINDOW or value > 1.0 + CLAMP_WINDOW:
        raise NumericalError(f"{what} escaped [0,1] beyond rounding: {value!r}")
    return min(1.0, max(0.0, value))


def _check_regions(mask: RegionMask) -> None:
    if mask.n_inner == 0 or mask.n_outer == 0:
        raise DegenerateMask(
            f"mask must have non-empty inner and outer regions "
            f"(inner={mask.n_inner}, outer={mask.n_outer})"
        )


def _combine(s: float, c: float, weights: MetricWeights) -> tuple:
    """Weighted harmonic combination of similarity and consistency.

    The denominator is floored at eps so S = C = 0 (identical images) returns
    0 with a flag instead of dividing by zero. Above the floor the division is
    exact, which preserves the algebraic reductions at alpha=1 or beta=1.
    """
    a, b, eps = weights.alpha, weights.beta, weights.epsilon
    denom = a * c + b * s
    if denom < eps:
        return 0.0, ("numerical-zero",)
    return (a + b) * s * c / denom, ()


def entangled_paired(
    original: ImagePlane,
    unlearned: ImagePlane,
    mask: RegionMask,
    weights: MetricWeights,
    config: MetricConfig = DEFAULT_CONFIG,
) -> EntangledScore:
    """Paired-image Entangled score (Entangled-D)."""
    if original.data.shape != unlearned.data.shape:
        raise DimensionMismatch(
            f"original {original.data.shape} vs unlearned {unlearned.data.shape}"
        )
    if config.grayscale:
        original, unlearned = original.grayscale(), unlearned.grayscale()
    _check_regions(mask)
    orig = partition(original, mask)
    unl = partition(unlearned, mask)

    s_inner = region_rmse(orig.inner, unl.inner)
    s_outer = region_rmse(orig.outer, unl.outer)
    s = combined_similarity(s_inner, s_outer, weights.epsilon)

    host = unl if config.consistency_source == "unlearned" else orig
    cons = consistency(
        host.inner, host.outer, weights.epsilon, config.uniform_region_consistency
    )

    value, flags = _combine(s, cons.c, weights)
    return EntangledScore(
        similarity=SimilarityBreakdown(s_inner=s_inner, s_outer=s_outer, combined=s),
        consistency=cons,
        weights=weights,
        value=_clamp(value, "entangled"),
        mode="paired",
        flags=flags,
    )


def entangled_single(
    unlearned: ImagePlane,
    mask: RegionMask,
    eps: float = DEFAULT_EPSILON,
    config: MetricConfig = DEFAULT_CONFIG,
) -> EntangledScore:
    """Single-image Entangled score (Entangled-S): consistency only (alpha = 0)."""
    if config.grayscale:
        unlearned = unlearned.grayscale()
    _check_regions(mask)
    samples = partition(unlearned, mask)
    cons = consistency(
        samples.inner, samples.outer, eps, config.uniform_region_consistency
    )
    return EntangledScore(
        similarity=None,
        consistency=cons,
        weights=MetricWeights(alpha=0.0, beta=1.0, epsilon=eps),
        value=_clamp(cons.c, "entangled-s"),
        mode="single",
    )
