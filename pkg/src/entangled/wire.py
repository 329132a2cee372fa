"""Wire codecs for the backend JSON-over-HTTP protocol.

Images travel as base64-encoded PNG; masks travel as run-length encodings.
Every response carries a protocol "version" field plus the serving model's
name/version for provenance. The in-process mock, the HTTP client, and any
remote adapter all speak exactly this schema.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image

from .imaging import ImagePlane

PROTOCOL_VERSION = "1"


def image_to_b64png(image: ImagePlane) -> str:
    """Encode an ImagePlane as base64 PNG (8-bit; lossy below 1/255 precision)."""
    arr = np.rint(image.data * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def b64png_to_image(payload: str) -> ImagePlane:
    """Decode a base64 PNG back to a normalized ImagePlane (alpha stripped)."""
    raw = base64.b64decode(payload)
    with Image.open(io.BytesIO(raw)) as im:
        im.load()
        alpha_stripped = False
        if im.mode in ("RGBA", "LA", "PA"):
            im = im.convert("RGB" if im.mode == "RGBA" else "L")
            alpha_stripped = True
        elif im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return ImagePlane(arr, alpha_stripped=alpha_stripped)
