"""Model suites behind the adapter's endpoints.

``ModelSuite`` is the seam where real pretrained models (segmentation,
image-text scoring, LLM validation, inpainting) plug in. The shipped
``FakeSuite`` returns deterministic canned outputs so protocol conformance
and end-to-end orchestration runs are testable without any model weights:
identical requests always produce identical responses.
"""

from __future__ import annotations

import dataclasses
import hashlib
from typing import List, Optional, Tuple

import numpy as np


@dataclasses.dataclass(frozen=True)
class AdapterConfig:
    """Service configuration.

    ``fake`` swaps every model binding for deterministic canned outputs.
    ``max_image_side`` bounds accepted image dimensions; larger payloads are
    rejected with a structured 413.
    """

    fake: bool = False
    max_image_side: int = 2048
    device: str = "cpu"
    segmenter_model: Optional[str] = None
    scorer_model: Optional[str] = None
    validator_model: Optional[str] = None
    inpainter_model: Optional[str] = None


class ModelSuite:
    """One implementation per deployment; all methods are pure functions of
    their arguments so the service stays stateless."""

    name: str = "abstract"
    version: str = "0"

    @property
    def model_id(self) -> str:
        return f"{self.name}@{self.version}"

    def segment(self, image: np.ndarray) -> List[np.ndarray]:
        raise NotImplementedError

    def score(self, image: np.ndarray, bits: np.ndarray, text: str) -> float:
        raise NotImplementedError

    def validate(self, image: np.ndarray, category: str) -> Tuple[str, str]:
        raise NotImplementedError

    def inpaint(
        self, image: np.ndarray, bits: np.ndarray, prompt: str, pass_index: int
    ) -> np.ndarray:
        raise NotImplementedError


def _request_rng(*parts: str) -> np.random.Generator:
    digest = hashlib.sha256("|".join(parts).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


class FakeSuite(ModelSuite):
    """Deterministic stand-in for the real model bindings.

    Segmentation proposes three rectangles, scoring reports the mask's area
    fraction, validation always answers yes with the question template in the
    raw transcript, and inpainting fills the masked region with noise matched
    to the surrounding statistics. Randomness is keyed off a hash of the
    request, never off process state.
    """

    name = "fake-suite"
    version = "1.0"

    def segment(self, image: np.ndarray) -> List[np.ndarray]:
        h, w = image.shape[:2]
        if h < 4 or w < 4:
            rects = [(0, 0, max(1, h // 2), max(1, w // 2))]
        else:
            rects = [
                (h // 4, w // 4, 3 * h // 4, 3 * w // 4),
                (0, 0, h // 2, w // 2),
                (h // 2, w // 2, h, w),
            ]
        masks = []
        for r0, c0, r1, c1 in rects:
            bits = np.zeros((h, w), dtype=bool)
            bits[r0:r1, c0:c1] = True
            masks.append(bits)
        return masks

    def score(self, image: np.ndarray, bits: np.ndarray, text: str) -> float:
        return float(bits.sum()) / bits.size

    def validate(self, image: np.ndarray, category: str) -> Tuple[str, str]:
        raw = f"Q: Is this a {category}? A: Yes, this is a {category}."
        return "yes", raw

    def inpaint(
        self, image: np.ndarray, bits: np.ndarray, prompt: str, pass_index: int
    ) -> np.ndarray:
        out = image.copy()
        outer = image[~bits]
        mu = float(outer.mean()) if outer.size else 0.5
        sigma = max(float(outer.std()), 1e-3) if outer.size else 0.1
        rng = _request_rng(
            hashlib.sha256(image.tobytes()).hexdigest(), prompt, str(pass_index)
        )
        noise = rng.normal(mu, sigma, size=(int(bits.sum()), image.shape[2]))
        out[bits] = np.clip(noise, 0.0, 1.0)
        return out


def build_suite(config: AdapterConfig) -> ModelSuite:
    if config.fake:
        return FakeSuite()
    raise RuntimeError(
        "no real model bindings are bundled with this adapter; "
        "run with fake mode or provide a ModelSuite implementation"
    )
