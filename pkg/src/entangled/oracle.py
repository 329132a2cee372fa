"""Literal scalar-loop reference for the Entangled metric.

This module exists for the test suite only: every accumulation is an explicit
Python loop over individual channel values, transcribing the defining
formulas with no vectorization or restructuring. The optimized engine in
``metric`` must agree with it to 1e-9.
"""

from __future__ import annotations

import math

from .errors import DegenerateMask, DimensionMismatch
from .imaging import ImagePlane, RegionMask
from .metric import (
    DEFAULT_CONFIG,
    ConsistencyBreakdown,
    EntangledScore,
    MetricConfig,
    MetricWeights,
    SimilarityBreakdown,
)


def _region_lists(image: ImagePlane, bits) -> tuple:
    inner, outer = [], []
    rows = image.data.tolist()
    for i, row in enumerate(rows):
        brow = bits[i]
        for j, px in enumerate(row):
            dest = inner if brow[j] else outer
            for val in px:
                dest.append(val)
    return inner, outer


def _rmse(xs, ys) -> float:
    acc = 0.0
    for x, y in zip(xs, ys):
        d = x - y
        acc += d * d
    return math.sqrt(acc / len(xs))


def _stats(xs) -> tuple:
    total = 0.0
    for x in xs:
        total += x
    mu = total / len(xs)
    acc = 0.0
    for x in xs:
        d = x - mu
        acc += d * d
    return mu, math.sqrt(acc / len(xs))


def oracle_entangled(
    original: ImagePlane,
    unlearned: ImagePlane,
    mask: RegionMask,
    weights: MetricWeights,
    config: MetricConfig = DEFAULT_CONFIG,
) -> EntangledScore:
    """Paired Entangled score, computed the slow literal way."""
    if original.data.shape != unlearned.data.shape:
        raise DimensionMismatch("image shapes differ")
    if (original.height, original.width) != (mask.height, mask.width):
        raise DimensionMismatch("mask dims differ from image dims")
    if config.grayscale:
        original, unlearned = original.grayscale(), unlearned.grayscale()
    bits = mask.bits.tolist()
    if mask.n_inner == 0 or mask.n_outer == 0:
        raise DegenerateMask("empty inner or outer region")

    o_in, o_out = _region_lists(original, bits)
    u_in, u_out = _region_lists(unlearned, bits)

    eps = weights.epsilon
    s_inner = _rmse(o_in, u_in)
    s_outer = _rmse(o_out, u_out)
    t = 1.0 - s_outer
    s = 2.0 * s_inner * t / (s_inner + t + eps)

    host_in, host_out = (u_in, u_out) if config.consistency_source == "unlearned" else (o_in, o_out)
    mu_in, sg_in = _stats(host_in)
    mu_out, sg_out = _stats(host_out)
    m = 2.0 * mu_in * mu_out / (mu_in * mu_in + mu_out * mu_out + eps)
    if config.uniform_region_consistency and sg_in < 1e-9 and sg_out < 1e-9:
        v = 1.0
    else:
        v = 2.0 * sg_in * sg_out / (sg_in * sg_in + sg_out * sg_out + eps)
    c = m * v

    denom = weights.alpha * c + weights.beta * s
    flags = ()
    if denom < eps:
        value = 0.0
        flags = ("numerical-zero",)
    else:
        value = (weights.alpha + weights.beta) * s * c / denom
    value = min(1.0, max(0.0, value))

    return EntangledScore(
        similarity=SimilarityBreakdown(s_inner=s_inner, s_outer=s_outer, combined=s),
        consistency=ConsistencyBreakdown(
            mu_inner=mu_in,
            mu_outer=mu_out,
            sigma_inner=sg_in,
            sigma_outer=sg_out,
            m=m,
            v=v,
            c=c,
        ),
        weights=weights,
        value=value,
        mode="paired",
        flags=flags,
    )
