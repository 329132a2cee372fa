import json

import numpy as np
import pytest

from entangled.imaging import ImagePlane, RegionMask, save_image, save_mask


def rand_image(rng, h, w, c=1) -> ImagePlane:
    return ImagePlane(rng.random((h, w, c)))


def rand_mask(rng, h, w) -> RegionMask:
    """Random non-degenerate mask (at least one inner and one outer pixel)."""
    bits = rng.random((h, w)) < rng.uniform(0.2, 0.8)
    flat = bits.ravel()
    if not flat.any():
        flat[rng.integers(flat.size)] = True
    if flat.all():
        flat[rng.integers(flat.size)] = False
    return RegionMask(flat.reshape(h, w))


def rect_mask(h, w, r0, c0, r1, c1) -> RegionMask:
    bits = np.zeros((h, w), dtype=bool)
    bits[r0:r1, c0:c1] = True
    return RegionMask(bits)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_pairs_fixture(root, count=4, size=16, seed=7):
    """original/, unlearned/, mask/ trees with seeded random pairs."""
    rng = np.random.default_rng(seed)
    for sub in ("original", "unlearned", "mask"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    ids = []
    for i in range(count):
        rid = f"rec{i:02d}"
        ids.append(rid)
        original = rand_image(rng, size, size, 3)
        mask = rect_mask(size, size, size // 4, size // 4, 3 * size // 4, 3 * size // 4)
        unl = np.array(original.data)
        unl[mask.bits] = 1.0 - unl[mask.bits]
        save_image(original, root / "original" / f"{rid}.png")
        save_image(ImagePlane(unl), root / "unlearned" / f"{rid}.png")
        save_mask(mask, root / "mask" / f"{rid}.png")
    return ids


def write_pipeline_fixture(root, count=10, size=32, seed=11):
    """Originals + manifest + mock script for an end-to-end pipeline run.

    Scripted behavior: the last record never validates (rejected), one record
    validates on the second candidate, one record needs a second inpainting
    pass. Everything is seeded, so reruns produce identical bytes.
    """
    rng = np.random.default_rng(seed)
    (root / "original").mkdir(parents=True, exist_ok=True)
    records = {}
    ids = []
    for i in range(count):
        rid = f"rec{i:02d}"
        ids.append(rid)
        save_image(rand_image(rng, size, size, 3), root / "original" / f"{rid}.png")
        entry = {
            "masks": [
                {"rect": [size // 4, size // 4, 3 * size // 4, 3 * size // 4]},
                {"rect": [0, 0, size // 2, size // 2]},
            ],
            "scores": [0.9, 0.6],
            "validate": ["yes"],
            "inpaint": [{"fill": "match-outer"}],
        }
        if i == count - 1:
            entry["validate"] = ["no", "no"]
        elif i == 3:
            entry["validate"] = ["no", "yes"]
        elif i == 5:
            entry["inpaint"] = [{"fill": 0.0}, {"fill": "match-outer"}]
        records[rid] = entry
    (root / "manifest.json").write_text(
        json.dumps({"dataset": "mock-e2e", "prompt": "<cat>", "records": []}) + "\n"
    )
    script_path = root / "script.json"
    script_path.write_text(json.dumps({"records": records}, indent=2, sort_keys=True) + "\n")
    return ids, script_path


def write_dataset_fixture(root, count=3, size=16, seed=3, dataset="fixture", prompt="<bird>",
                          rejected=0):
    """A complete manifest root: original/background/mask + manifest.json.

    The last `rejected` records are listed in the manifest as rejected and get
    no background image.
    """
    rng = np.random.default_rng(seed)
    for sub in ("original", "background", "mask"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    ids = []
    records = []
    for i in range(count):
        rid = f"img{i:03d}"
        ids.append(rid)
        if i >= count - rejected:
            save_image(rand_image(rng, size, size, 3), root / "original" / f"{rid}.png")
            records.append({"id": rid, "status": "rejected", "reason": "below-threshold"})
            continue
        original = rand_image(rng, size, size, 3)
        mask = rect_mask(size, size, 2, 2, size - 4, size - 4)
        bg = np.array(original.data)
        bg[mask.bits] = rng.random((mask.n_inner, 3))
        save_image(original, root / "original" / f"{rid}.png")
        save_image(ImagePlane(bg), root / "background" / f"{rid}.png")
        save_mask(mask, root / "mask" / f"{rid}.png")
        records.append({"id": rid, "status": "selected"})
    (root / "manifest.json").write_text(
        json.dumps({"dataset": dataset, "prompt": prompt, "records": records}) + "\n"
    )
    return ids
