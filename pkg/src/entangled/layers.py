"""Layered editing: foreground extraction, masking out, and re-merging.

A foreground layer is a tight crop of the mask's inner region with a per-pixel
alpha; merging places it back on a canvas at the position recorded by a
full-canvas position mask, optionally feathering the alpha near the mask
boundary to hide seams.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DegenerateMask, DimensionMismatch, OutOfCanvas
from .imaging import ImagePlane, RegionMask


@dataclasses.dataclass(frozen=True)
class ForegroundLayer:
    """Cropped foreground pixels + coverage alpha + placement origin (row, col)."""

    pixels: ImagePlane
    alpha: np.ndarray
    origin: Tuple[int, int]

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=np.float64)
        if arr.shape != (self.pixels.height, self.pixels.width):
            raise ValueError("alpha dims must match pixel dims")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "alpha", arr)
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))


@dataclasses.dataclass(frozen=True)
class BlendConfig:
    """Edge blending: 'hard' pastes the binary alpha; 'feathered' ramps it
    linearly with distance to the mask boundary over feather_radius pixels."""

    feather_radius: int = 2
    mode: str = "feathered"

    def __post_init__(self):
        if self.mode not in ("hard", "feathered"):
            raise ValueError(f"bad blend mode: {self.mode!r}")
        if self.feather_radius < 0:
            raise ValueError("feather_radius must be >= 0")


HARD_BLEND = BlendConfig(feather_radius=0, mode="hard")


def _bbox(bits: np.ndarray) -> Tuple[int, int, int, int]:
    rows = np.any(bits, axis=1)
    cols = np.any(bits, axis=0)
    r0, r1 = np.where(rows)[0][[0, -1]]
    c0, c1 = np.where(cols)[0][[0, -1]]
    return int(r0), int(c0), int(r1) + 1, int(c1) + 1


def extract_foreground(image: ImagePlane, mask: RegionMask) -> ForegroundLayer:
    """Crop the mask's inner region to its tight bounding box.

    Alpha is 1 where the mask is inner, 0 elsewhere inside the box.
    """
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            f"image {image.width}x{image.height} vs mask {mask.width}x{mask.height}"
        )
    if mask.n_inner == 0:
        raise DegenerateMask("mask has no inner pixels to extract")
    r0, c0, r1, c1 = _bbox(mask.bits)
    pixels = ImagePlane(image.data[r0:r1, c0:c1], alpha_stripped=image.alpha_stripped)
    alpha = mask.bits[r0:r1, c0:c1].astype(np.float64)
    return ForegroundLayer(pixels=pixels, alpha=alpha, origin=(r0, c0))


def _feathered_alpha(
    alpha: np.ndarray, radius: int, canvas_shape: tuple, offset: tuple
) -> np.ndarray:
    """Linear ramp over Euclidean distance to the coverage boundary.

    A covered pixel at distance d from the nearest uncovered pixel gets
    alpha * min(1, d / (radius + 1)), so radius 0 reproduces hard compositing
    bit-exactly and pixels farther than radius from the boundary are untouched.
    Distances are measured on the full canvas: the canvas edge is not a
    boundary, so coverage flush against it does not fade.
    """
    if radius == 0:
        return alpha
    r0, c0 = offset
    fh, fw = alpha.shape
    covered = np.zeros(canvas_shape, dtype=bool)
    covered[r0 : r0 + fh, c0 : c0 + fw] = alpha > 0
    if covered.all():
        return alpha
    dist = ndimage.distance_transform_edt(covered)[r0 : r0 + fh, c0 : c0 + fw]
    ramp = np.minimum(1.0, dist / float(radius + 1))
    return alpha * ramp


def merge_layers(
    background: ImagePlane,
    fg: ForegroundLayer,
    pos: RegionMask,
    cfg: BlendConfig = HARD_BLEND,
) -> ImagePlane:
    """Composite a foreground layer onto a background at the position mask's box."""
    if (background.height, background.width) != (pos.height, pos.width):
        raise DimensionMismatch(
            f"background {background.width}x{background.height} vs "
            f"position mask {pos.width}x{pos.height}"
        )
    if background.channels != fg.pixels.channels:
        raise DimensionMismatch(
            f"background has {background.channels} channels, layer has {fg.pixels.channels}"
        )
    if pos.n_inner == 0:
        raise DegenerateMask("position mask has no inner pixels")
    r0, c0, _, _ = _bbox(pos.bits)
    fh, fw = fg.pixels.height, fg.pixels.width
    if r0 + fh > background.height or c0 + fw > background.width:
        raise OutOfCanvas(
            f"layer {fw}x{fh} at ({r0},{c0}) exceeds canvas "
            f"{background.width}x{background.height}"
        )
    alpha = (
        fg.alpha
        if cfg.mode == "hard"
        else _feathered_alpha(
            fg.alpha, cfg.feather_radius, (background.height, background.width), (r0, c0)
        )
    )
    out = np.array(background.data)
    window = out[r0 : r0 + fh, c0 : c0 + fw]
    out[r0 : r0 + fh, c0 : c0 + fw] = (
        alpha[:, :, None] * fg.pixels.data + (1.0 - alpha[:, :, None]) * window
    )
    return ImagePlane(out)


def mask_out(image: ImagePlane, mask: RegionMask, fill: float = 0.0) -> ImagePlane:
    """Replace inner pixels with a constant fill; outer pixels pass through."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            f"image {image.width}x{image.height} vs mask {mask.width}x{mask.height}"
        )
    if not 0.0 <= fill <= 1.0:
        raise ValueError("fill must lie in [0, 1]")
    out = np.array(image.data)
    out[mask.bits] = fill
    return ImagePlane(out, alpha_stripped=image.alpha_stripped)


def save_layer(layer: ForegroundLayer, path) -> None:
    """Serialize a foreground layer as an RGBA PNG (alpha carries coverage)."""
    rgb = np.rint(layer.pixels.data * 255.0).astype(np.uint8)
    if rgb.shape[2] == 1:
        rgb = np.repeat(rgb, 3, axis=2)
    a = np.rint(layer.alpha * 255.0).astype(np.uint8)
    rgba = np.dstack([rgb, a])
    Image.fromarray(rgba, mode="RGBA").save(Path(path), format="PNG")


def load_layer(path, origin: Tuple[int, int]) -> ForegroundLayer:
    """Load an RGBA PNG back into a foreground layer at the given origin."""
    with Image.open(Path(path)) as im:
        rgba = np.asarray(im.convert("RGBA"), dtype=np.float64) / 255.0
    return ForegroundLayer(
        pixels=ImagePlane(rgba[:, :, :3]),
        alpha=rgba[:, :, 3],
        origin=origin,
    )
