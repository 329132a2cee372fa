"""Pluggable inference backends for the dataset-construction pipeline.

A backend suite bundles four roles: segmenter, scorer, validator, inpainter.
The heavy pretrained models live behind this interface; this module ships a
deterministic in-process mock (optionally driven by a script file of canned
responses keyed by record id) and an HTTP client for remote adapters speaking
the shared JSON protocol:

    POST /segment   {image}                    -> {masks: [RLE...], ...}
    POST /score     {image, mask, text}        -> {score, ...}
    POST /validate  {image, category}          -> {answer: "yes"|"no", raw, ...}
    POST /inpaint   {image, mask, prompt, pass_index?} -> {image, ...}

Every response carries "version" (protocol) and "model" (name@version).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import requests

from .errors import BackendUnavailable
from .imaging import ImagePlane, RegionMask, partition
from .rle import mask_to_rle, rle_to_mask
from .wire import PROTOCOL_VERSION, b64png_to_image, image_to_b64png


@dataclasses.dataclass(frozen=True)
class MaskCandidate:
    """A segmentation proposal, scored for relevance to the target text."""

    mask: RegionMask
    source_id: str
    score: Optional[float] = None


class BackendSuite:
    """Interface every backend implements. ``begin_record`` is an optional
    hook the orchestrator calls so scripted backends can key responses by
    record id (the wire calls themselves carry no id)."""

    name: str = "abstract"
    version: str = "0"

    def begin_record(self, record_id: str) -> None:  # pragma: no cover - hook
        pass

    def segment(self, image: ImagePlane) -> List[MaskCandidate]:
        raise NotImplementedError

    def score(self, image: ImagePlane, mask: RegionMask, text: str) -> float:
        raise NotImplementedError

    def validate(self, image: ImagePlane, category: str) -> Tuple[bool, str]:
        raise NotImplementedError

    def inpaint(
        self, image: ImagePlane, mask: RegionMask, prompt: str, pass_index: int = 0
    ) -> ImagePlane:
        raise NotImplementedError


def _record_rng(seed: int, record_id: str, salt: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{record_id}:{salt}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _rect_mask(dims: Tuple[int, int], rect: Tuple[int, int, int, int]) -> RegionMask:
    h, w = dims
    r0, c0, r1, c1 = rect
    bits = np.zeros((h, w), dtype=bool)
    bits[r0:r1, c0:c1] = True
    return RegionMask(bits)


class MockBackend(BackendSuite):
    """Deterministic in-process backend.

    Without a script it produces three rectangular mask candidates, scores
    them by inner-area fraction, validates the first attempt, and inpaints by
    filling the inner region with noise matched to the outer region's mean
    and standard deviation (which scores high on the single-image metric).

    A script file overrides any of that per record id:

        {"records": {"<id>": {
            "masks":    [{"rect": [r0, c0, r1, c1]} | {"rle": {...}}, ...],
            "scores":   [0.9, 0.7, ...],          # aligned with masks
            "validate": ["no", "yes", ...],       # consumed per attempt
            "inpaint":  [{"fill": "match-outer"} | {"fill": 0.25}, ...]  # per pass
        }}}
    """

    name = "mock"
    version = "1.0"

    def __init__(self, script=None, seed: int = 0):
        self.seed = seed
        self._record_id = ""
        self._validate_cursor = 0
        if script is None:
            self.script = {}
        elif isinstance(script, (str, Path)):
            self.script = json.loads(Path(script).read_text()).get("records", {})
        else:
            self.script = dict(script.get("records", script))

    def _entry(self) -> dict:
        return self.script.get(self._record_id, {})

    def begin_record(self, record_id: str) -> None:
        self._record_id = record_id
        self._validate_cursor = 0

    def segment(self, image: ImagePlane) -> List[MaskCandidate]:
        entry = self._entry()
        dims = (image.height, image.width)
        if "masks" in entry:
            masks = []
            for i, spec in enumerate(entry["masks"]):
                if "rect" in spec:
                    mask = _rect_mask(dims, spec["rect"])
                else:
                    mask = rle_to_mask(spec["rle"])
                masks.append(MaskCandidate(mask=mask, source_id=f"m{i}"))
            return masks
        h, w = dims
        if h < 4 or w < 4:
            return [MaskCandidate(mask=_rect_mask(dims, (0, 0, max(1, h // 2), max(1, w // 2))), source_id="m0")]
        rects = [
            (h // 4, w // 4, 3 * h // 4, 3 * w // 4),
            (0, 0, h // 2, w // 2),
            (h // 2, w // 2, h, w),
        ]
        return [
            MaskCandidate(mask=_rect_mask(dims, r), source_id=f"m{i}")
            for i, r in enumerate(rects)
        ]

    def score(self, image: ImagePlane, mask: RegionMask, text: str) -> float:
        entry = self._entry()
        if "scores" in entry:
            # masks and scores are aligned by candidate order; recover the
            # index from the mask identity via RLE equality
            target = mask_to_rle(mask)
            for i, spec in enumerate(entry.get("masks", [])):
                cand = _rect_mask((mask.height, mask.width), spec["rect"]) if "rect" in spec else rle_to_mask(spec["rle"])
                if mask_to_rle(cand) == target and i < len(entry["scores"]):
                    return float(entry["scores"][i])
        # default: central-area heuristic, deterministic in the mask alone
        return mask.n_inner / mask.bits.size

    def validate(self, image: ImagePlane, category: str) -> Tuple[bool, str]:
        entry = self._entry()
        answers = entry.get("validate", ["yes"])
        idx = min(self._validate_cursor, len(answers) - 1)
        self._validate_cursor += 1
        answer = str(answers[idx]).lower() == "yes"
        raw = (
            f"Q: Is this a {category}? "
            f"A: {'Yes' if answer else 'No'}, this is {'a' if answer else 'not a'} {category}."
        )
        return answer, raw

    def inpaint(
        self, image: ImagePlane, mask: RegionMask, prompt: str, pass_index: int = 0
    ) -> ImagePlane:
        entry = self._entry()
        specs = entry.get("inpaint", [{"fill": "match-outer"}])
        spec = specs[min(pass_index, len(specs) - 1)]
        out = np.array(image.data)
        fill = spec.get("fill", "match-outer")
        if fill == "match-outer":
            samples = partition(image, mask)
            mu = float(samples.outer.mean()) if samples.outer.size else 0.5
            sigma = float(samples.outer.std()) if samples.outer.size else 0.1
            rng = _record_rng(self.seed, self._record_id, f"inpaint{pass_index}")
            noise = rng.normal(mu, max(sigma, 1e-3), size=(mask.n_inner, image.channels))
            out[mask.bits] = np.clip(noise, 0.0, 1.0)
        else:
            out[mask.bits] = float(fill)
        return ImagePlane(out, alpha_stripped=image.alpha_stripped)


class HttpBackend(BackendSuite):
    """Client for a remote adapter speaking the shared JSON protocol."""

    def __init__(self, base_url: str, timeout: float = 30.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self.name = f"http:{self.base_url}"
        self.version = PROTOCOL_VERSION

    def _post(self, endpoint: str, payload: dict) -> dict:
        url = f"{self.base_url}/{endpoint}"
        try:
            resp = self.session.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"{url}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"{url}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise BackendUnavailable(f"{url}: non-JSON response") from exc
        if "version" not in body:
            raise BackendUnavailable(f"{url}: response missing protocol version")
        return body

    def segment(self, image: ImagePlane) -> List[MaskCandidate]:
        body = self._post("segment", {"image": image_to_b64png(image)})
        return [
            MaskCandidate(mask=rle_to_mask(rle), source_id=f"m{i}")
            for i, rle in enumerate(body["masks"])
        ]

    def score(self, image: ImagePlane, mask: RegionMask, text: str) -> float:
        body = self._post(
            "score",
            {"image": image_to_b64png(image), "mask": mask_to_rle(mask), "text": text},
        )
        return float(body["score"])

    def validate(self, image: ImagePlane, category: str) -> Tuple[bool, str]:
        body = self._post(
            "validate", {"image": image_to_b64png(image), "category": category}
        )
        answer = str(body["answer"]).lower()
        if answer not in ("yes", "no"):
            raise BackendUnavailable(f"validate returned non-binary answer: {answer!r}")
        return answer == "yes", str(body.get("raw", ""))

    def inpaint(
        self, image: ImagePlane, mask: RegionMask, prompt: str, pass_index: int = 0
    ) -> ImagePlane:
        body = self._post(
            "inpaint",
            {
                "image": image_to_b64png(image),
                "mask": mask_to_rle(mask),
                "prompt": prompt,
                "pass_index": pass_index,
            },
        )
        return b64png_to_image(body["image"])


def make_backend(spec: str) -> BackendSuite:
    """Build a backend from a CLI spec: 'mock', 'mock:<script.json>' or an URL."""
    if spec == "mock":
        return MockBackend()
    if spec.startswith("mock:"):
        return MockBackend(script=spec[len("mock:") :])
    if spec.startswith(("http://", "https://")):
        return HttpBackend(spec)
    raise ValueError(f"unrecognized backend spec: {spec!r}")
