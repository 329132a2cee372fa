"""Schema checks for the backend wire protocol, shared by the in-process
mock's and the HTTP adapter's conformance suites.

``run_case(case, responder)`` sends one canned request through a responder
callable ``(endpoint: str, payload: dict) -> dict`` and asserts the response
matches the protocol schema. Both test suites load this module straight from
the fixture directory, so mock and adapter are held to byte-for-byte the same
contract.
"""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path

from PIL import Image

PROTOCOL_VERSION = "1"


def load_cases(directory) -> list:
    doc = json.loads((Path(directory) / "cases.json").read_text())
    assert doc["protocol_version"] == PROTOCOL_VERSION
    return doc["cases"]


def _check_envelope(body: dict, endpoint: str) -> None:
    assert isinstance(body, dict), f"{endpoint}: body must be a JSON object"
    assert body.get("version") == PROTOCOL_VERSION, f"{endpoint}: bad protocol version"
    model = body.get("model")
    assert isinstance(model, str) and "@" in model, (
        f"{endpoint}: 'model' must be 'name@version', got {model!r}"
    )


def _check_rle(rle: dict, endpoint: str) -> None:
    assert set(rle) == {"size", "counts"}, f"{endpoint}: RLE keys {sorted(rle)}"
    h, w = rle["size"]
    counts = rle["counts"]
    assert isinstance(h, int) and isinstance(w, int) and h > 0 and w > 0
    assert all(isinstance(c, int) and c >= 0 for c in counts)
    assert sum(counts) == h * w, f"{endpoint}: RLE counts sum mismatch"
    assert all(c > 0 for c in counts[1:]), (
        f"{endpoint}: only the leading zeros run may be empty"
    )


def _decode_png(data: str, endpoint: str) -> tuple:
    raw = base64.b64decode(data, validate=True)
    with Image.open(io.BytesIO(raw)) as img:
        return img.size  # (w, h)


def run_case(case: dict, responder) -> dict:
    """Execute one canned request and validate the response schema."""
    endpoint = case["endpoint"]
    body = responder(endpoint, case["request"])
    _check_envelope(body, endpoint)
    expect = case.get("expect", {})

    if endpoint == "segment":
        masks = body["masks"]
        assert isinstance(masks, list) and masks, f"{endpoint}: empty mask list"
        for rle in masks:
            _check_rle(rle, endpoint)
            assert rle["size"] == expect["mask_size"]
    elif endpoint == "score":
        score = body["score"]
        assert isinstance(score, (int, float)) and 0.0 <= score <= 1.0
    elif endpoint == "validate":
        assert body["answer"] in ("yes", "no"), f"{endpoint}: non-binary answer"
        raw = body["raw"]
        assert isinstance(raw, str)
        assert expect["raw_contains"] in raw, (
            f"{endpoint}: raw transcript must quote the question template"
        )
    elif endpoint == "inpaint":
        w, h = _decode_png(body["image"], endpoint)
        assert [h, w] == expect["image_size"], f"{endpoint}: output dims changed"
    else:
        raise AssertionError(f"unknown endpoint in fixtures: {endpoint}")
    return body


def run_all(directory, responder) -> int:
    """Run every canned case, plus a statelessness check per endpoint."""
    cases = load_cases(directory)
    for case in cases:
        first = run_case(case, responder)
        second = run_case(case, responder)
        assert first == second, f"{case['endpoint']}: identical requests diverged"
    return len(cases)
