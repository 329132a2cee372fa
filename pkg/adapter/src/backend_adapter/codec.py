"""Wire codecs for the shared JSON protocol.

Images travel as base64-encoded PNG; masks as row-major run-length
encodings ``{"size": [h, w], "counts": [...]}`` whose counts alternate
zero-runs and one-runs starting with the zeros run. This module is
self-contained so the adapter interoperates with any client speaking the
documented protocol, without importing the orchestration toolkit.
"""

from __future__ import annotations

import base64
import binascii
import io
from typing import List

import numpy as np
from PIL import Image, UnidentifiedImageError

PROTOCOL_VERSION = "1"


class CodecError(ValueError):
    """Malformed wire payload (bad base64, bad PNG, inconsistent RLE)."""


def b64png_to_array(data: str) -> np.ndarray:
    """Decode a base64 PNG into a float64 (h, w, c) array in [0, 1]."""
    try:
        raw = base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise CodecError(f"invalid base64 image payload: {exc}") from exc
    try:
        with Image.open(io.BytesIO(raw)) as img:
            img = img.convert("RGB") if img.mode not in ("L", "RGB") else img
            arr = np.asarray(img, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise CodecError(f"payload is not a decodable image: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def array_to_b64png(arr: np.ndarray) -> str:
    """Encode a float (h, w, c) array in [0, 1] as a base64 PNG string."""
    u8 = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    if u8.shape[2] == 1:
        img = Image.fromarray(u8[:, :, 0], mode="L")
    else:
        img = Image.fromarray(u8, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def rle_to_bits(rle: dict) -> np.ndarray:
    """Decode an RLE object into a boolean (h, w) array."""
    try:
        h, w = (int(v) for v in rle["size"])
        counts = [int(c) for c in rle["counts"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CodecError(f"malformed RLE object: {exc}") from exc
    if h <= 0 or w <= 0 or any(c < 0 for c in counts):
        raise CodecError("RLE size and counts must be non-negative")
    if sum(counts) != h * w:
        raise CodecError(f"RLE counts sum to {sum(counts)}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(h, w)


def bits_to_rle(bits: np.ndarray) -> dict:
    """Encode a boolean (h, w) array as an RLE object (zeros run first)."""
    flat = bits.ravel().astype(np.int8)
    counts: List[int] = []
    if flat.size:
        edges = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate(([0], edges, [flat.size]))
        counts = np.diff(bounds).tolist()
        if flat[0] == 1:
            counts = [0] + counts
    return {"size": [int(bits.shape[0]), int(bits.shape[1])], "counts": counts}
