"""Image and mask primitives: loading, normalization, region partitioning.

Pixel data is stored as float64 in [0, 1], shape (height, width, channels),
row-major with interleaved channels. Masks are boolean per-pixel partitions
into an inner (True) and outer (False) region. All types are immutable after
construction and every operation here is pure, so concurrent use needs no
locking.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionMismatch, UnreadableFile, UnsupportedFormat

_SUPPORTED_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclasses.dataclass(frozen=True)
class ImagePlane:
    """Normalized pixel matrix; ``data`` has shape (height, width, channels)."""

    data: np.ndarray
    alpha_stripped: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) pixel array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def grayscale(self) -> "ImagePlane":
        """Channel-mean projection to a single channel."""
        if self.channels == 1:
            return self
        return ImagePlane(self.data.mean(axis=2), alpha_stripped=self.alpha_stripped)


@dataclasses.dataclass(frozen=True)
class RegionMask:
    """Boolean partition of a canvas: True = inner region, False = outer."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"expected (h, w) boolean array, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def n_inner(self) -> int:
        return int(self.bits.sum())

    @property
    def n_outer(self) -> int:
        return self.bits.size - self.n_inner

    def complement(self) -> "RegionMask":
        return RegionMask(~self.bits)


@dataclasses.dataclass(frozen=True)
class RegionSamples:
    """Flat per-region sample vectors (one entry per channel value)."""

    inner: np.ndarray
    outer: np.ndarray

    def __post_init__(self):
        for name in ("inner", "outer"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64).ravel())
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _decode(path) -> Tuple[np.ndarray, bool]:
    """Decode a raster file to a float array in [0, 1]; returns (array, alpha_stripped)."""
    path = Path(path)
    if path.suffix.lower() not in _SUPPORTED_SUFFIXES:
        raise UnsupportedFormat(f"unsupported raster format: {path.name}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            alpha_stripped = False
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode in ("RGBA", "LA", "PA"):
                im = im.convert("RGB" if mode == "RGBA" else "L")
                alpha_stripped = True
            elif mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
                return np.clip(arr, 0.0, 1.0), False
            elif mode == "CMYK":
                im = im.convert("RGB")
            elif mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
            return arr, alpha_stripped
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    except (OSError, ValueError) as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc


def load_image(path, expected_dims: Optional[Tuple[int, int]] = None) -> ImagePlane:
    """Load a PNG/JPEG as a normalized ImagePlane.

    ``expected_dims`` is (width, height); a mismatch raises DimensionMismatch.
    Alpha channels are stripped (flagged on the result), never composited.
    """
    arr, alpha_stripped = _decode(path)
    plane = ImagePlane(arr, alpha_stripped=alpha_stripped)
    if expected_dims is not None:
        if (plane.width, plane.height) != tuple(expected_dims):
            raise DimensionMismatch(
                f"{path}: expected {expected_dims[0]}x{expected_dims[1]}, "
                f"got {plane.width}x{plane.height}"
            )
    return plane


def load_mask(path, threshold: float = 0.5) -> RegionMask:
    """Load a mask raster; a pixel is inner iff its normalized value >= threshold.

    Multi-channel masks are reduced by the per-pixel channel maximum. An empty
    inner region is legal here; metric operations reject degenerate masks.
    """
    arr, _ = _decode(path)
    if arr.ndim == 3:
        arr = arr.max(axis=2)
    return RegionMask(arr >= threshold)


def partition(image: ImagePlane, mask: RegionMask) -> RegionSamples:
    """Split an image's channel values into inner/outer sample vectors.

    Each channel value is one sample; samples appear in row-major pixel order
    with channels interleaved, so re-interleaving by pixel index reproduces
    the image exactly.
    """
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            f"image {image.width}x{image.height} vs mask {mask.width}x{mask.height}"
        )
    inner = image.data[mask.bits].ravel()
    outer = image.data[~mask.bits].ravel()
    return RegionSamples(inner=inner, outer=outer)


def save_image(image: ImagePlane, path) -> None:
    """Write an ImagePlane as an 8-bit PNG (deterministic bytes for fixed input)."""
    arr = np.rint(image.data * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(Path(path), format="PNG")


def save_mask(mask: RegionMask, path) -> None:
    """Write a RegionMask as a single-channel PNG (inner=255, outer=0)."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")


def image_dims(path) -> Tuple[int, int]:
    """Cheap (width, height) probe without full decode."""
    try:
        with Image.open(Path(path)) as im:
            return im.size
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
