import numpy as np
import pytest

from backend_adapter.codec import PROTOCOL_VERSION, b64png_to_array, rle_to_bits
from backend_adapter.models import AdapterConfig, build_suite

from conftest import make_image, make_mask


class TestEnvelope:
    def test_every_endpoint_reports_version_and_model(self, client, rng):
        image = make_image(rng)
        mask = make_mask()
        calls = [
            ("/segment", {"image": image}),
            ("/score", {"image": image, "mask": mask, "text": "cat"}),
            ("/validate", {"image": image, "category": "cat"}),
            ("/inpaint", {"image": image, "mask": mask, "prompt": "bg"}),
        ]
        for path, payload in calls:
            resp = client.post(path, json=payload)
            assert resp.status_code == 200, (path, resp.text)
            body = resp.json()
            assert body["version"] == PROTOCOL_VERSION
            assert body["model"] == "fake-suite@1.0"


class TestSegment:
    def test_masks_cover_image_dims(self, client, rng):
        body = client.post("/segment", json={"image": make_image(rng, 20, 14)}).json()
        assert len(body["masks"]) == 3
        for rle in body["masks"]:
            bits = rle_to_bits(rle)
            assert bits.shape == (20, 14)
            assert bits.any()


class TestScore:
    def test_area_fraction(self, client, rng):
        body = client.post(
            "/score",
            json={"image": make_image(rng), "mask": make_mask(), "text": "cat"},
        ).json()
        assert body["score"] == pytest.approx(64 / 256)

    def test_mask_dims_must_match(self, client, rng):
        resp = client.post(
            "/score",
            json={"image": make_image(rng, 8, 8), "mask": make_mask(), "text": "cat"},
        )
        assert resp.status_code == 400
        assert resp.json()["error"]["code"] == "malformed-payload"


class TestValidate:
    def test_question_template_in_raw(self, client, rng):
        body = client.post(
            "/validate", json={"image": make_image(rng), "category": "red bird"}
        ).json()
        assert body["answer"] == "yes"
        assert "Q: Is this a red bird?" in body["raw"]


class TestInpaint:
    def test_fills_only_inner_region(self, client, rng):
        image = make_image(rng)
        mask = make_mask()
        body = client.post(
            "/inpaint", json={"image": image, "mask": mask, "prompt": "bg"}
        ).json()
        out = b64png_to_array(body["image"])
        original = b64png_to_array(image)
        bits = rle_to_bits(mask)
        assert np.array_equal(out[~bits], original[~bits])
        assert not np.array_equal(out[bits], original[bits])

    def test_deterministic_per_request(self, client, rng):
        payload = {"image": make_image(rng), "mask": make_mask(), "prompt": "bg"}
        first = client.post("/inpaint", json=payload).json()
        second = client.post("/inpaint", json=payload).json()
        assert first == second

    def test_pass_index_varies_output(self, client, rng):
        image, mask = make_image(rng), make_mask()
        a = client.post("/inpaint", json={"image": image, "mask": mask, "prompt": "bg",
                                          "pass_index": 0}).json()
        b = client.post("/inpaint", json={"image": image, "mask": mask, "prompt": "bg",
                                          "pass_index": 1}).json()
        assert a["image"] != b["image"]


class TestErrors:
    def test_bad_base64_is_400(self, client):
        resp = client.post("/segment", json={"image": "@@@"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["version"] == PROTOCOL_VERSION
        assert body["error"]["code"] == "malformed-payload"

    def test_missing_field_is_4xx(self, client):
        resp = client.post("/score", json={"image": "abc"})
        assert 400 <= resp.status_code < 500

    def test_oversize_image_is_413(self, small_client, rng):
        resp = small_client.post("/segment", json={"image": make_image(rng, 64, 64)})
        assert resp.status_code == 413
        body = resp.json()
        assert body["error"]["code"] == "image-too-large"
        assert body["version"] == PROTOCOL_VERSION

    def test_bad_rle_is_400(self, client, rng):
        resp = client.post(
            "/score",
            json={"image": make_image(rng), "mask": {"size": [16, 16], "counts": [5]},
                  "text": "cat"},
        )
        assert resp.status_code == 400


class TestConfig:
    def test_real_mode_requires_bindings(self):
        with pytest.raises(RuntimeError):
            build_suite(AdapterConfig(fake=False))
