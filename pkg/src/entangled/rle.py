"""Run-length encoding for binary masks (row-major, counts start with zeros)."""

from __future__ import annotations

from typing import Dict, List

import numpy as np

from .imaging import RegionMask


def mask_to_rle(mask: RegionMask) -> Dict:
    """Encode a mask as {"size": [h, w], "counts": [...]}.

    Counts alternate run lengths of 0s and 1s over the row-major flattening,
    always beginning with the zeros run (possibly 0).
    """
    flat = mask.bits.ravel().astype(np.int8)
    counts: List[int] = []
    if flat.size:
        change = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate([[0], change, [flat.size]])
        runs = np.diff(bounds).tolist()
        if flat[0] == 1:
            counts.append(0)
        counts.extend(int(r) for r in runs)
    return {"size": [mask.height, mask.width], "counts": counts}


def rle_to_mask(rle: Dict) -> RegionMask:
    """Decode {"size", "counts"} back to a RegionMask."""
    h, w = (int(v) for v in rle["size"])
    total = h * w
    flat = np.zeros(total, dtype=bool)
    pos = 0
    val = False
    for run in rle["counts"]:
        run = int(run)
        if run < 0 or pos + run > total:
            raise ValueError("RLE counts exceed mask size")
        if val:
            flat[pos : pos + run] = True
        pos += run
        val = not val
    if pos != total:
        raise ValueError(f"RLE counts cover {pos} of {total} pixels")
    return RegionMask(flat.reshape(h, w))
