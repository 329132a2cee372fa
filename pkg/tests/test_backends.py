import json

import numpy as np
import pytest

from entangled.backends import HttpBackend, MockBackend, make_backend
from entangled.errors import BackendUnavailable
from entangled.metric import entangled_single
from entangled.rle import mask_to_rle

from conftest import rand_image, rect_mask


SCRIPT = {
    "records": {
        "r1": {
            "masks": [
                {"rect": [0, 0, 4, 4]},
                {"rect": [4, 4, 8, 8]},
                {"rect": [2, 2, 6, 6]},
            ],
            "scores": [0.9, 0.7, 0.2],
            "validate": ["no", "yes"],
            "inpaint": [{"fill": 0.0}, {"fill": "match-outer"}],
        }
    }
}


class TestMockBackend:
    def test_scripted_masks_and_scores(self, rng):
        backend = MockBackend(script=SCRIPT)
        backend.begin_record("r1")
        image = rand_image(rng, 8, 8)
        candidates = backend.segment(image)
        assert [c.source_id for c in candidates] == ["m0", "m1", "m2"]
        scores = [backend.score(image, c.mask, "<cat>") for c in candidates]
        assert scores == [0.9, 0.7, 0.2]

    def test_scripted_validate_sequence(self, rng):
        backend = MockBackend(script=SCRIPT)
        backend.begin_record("r1")
        image = rand_image(rng, 4, 4)
        first, raw = backend.validate(image, "<cat>")
        second, _ = backend.validate(image, "<cat>")
        third, _ = backend.validate(image, "<cat>")  # past the end: last answer repeats
        assert (first, second, third) == (False, True, True)
        assert "Is this a <cat>?" in raw

    def test_validate_cursor_resets_per_record(self, rng):
        backend = MockBackend(script=SCRIPT)
        image = rand_image(rng, 4, 4)
        backend.begin_record("r1")
        assert backend.validate(image, "x")[0] is False
        backend.begin_record("r1")
        assert backend.validate(image, "x")[0] is False

    def test_default_behavior_unscripted(self, rng):
        backend = MockBackend()
        backend.begin_record("any")
        image = rand_image(rng, 16, 16)
        candidates = backend.segment(image)
        assert len(candidates) == 3
        assert all(c.mask.n_inner > 0 for c in candidates)
        assert backend.validate(image, "x")[0] is True

    def test_match_outer_inpaint_scores_high(self, rng):
        backend = MockBackend()
        backend.begin_record("rec")
        image = rand_image(rng, 64, 64)
        mask = rect_mask(64, 64, 16, 16, 48, 48)
        filled = backend.inpaint(image, mask, "<cat>")
        assert entangled_single(filled, mask).value > 0.9

    def test_constant_fill_scores_low(self, rng):
        backend = MockBackend(script=SCRIPT)
        backend.begin_record("r1")
        image = rand_image(rng, 8, 8)
        mask = rect_mask(8, 8, 2, 2, 6, 6)
        filled = backend.inpaint(image, mask, "<cat>", pass_index=0)
        assert np.all(filled.data[mask.bits] == 0.0)
        assert entangled_single(filled, mask).value < 0.1

    def test_inpaint_deterministic(self, rng):
        image = rand_image(rng, 16, 16)
        mask = rect_mask(16, 16, 4, 4, 12, 12)
        a = MockBackend(seed=5)
        a.begin_record("rec")
        b = MockBackend(seed=5)
        b.begin_record("rec")
        np.testing.assert_array_equal(
            a.inpaint(image, mask, "p").data, b.inpaint(image, mask, "p").data
        )

    def test_script_from_file(self, tmp_path, rng):
        path = tmp_path / "script.json"
        path.write_text(json.dumps(SCRIPT))
        backend = MockBackend(script=path)
        backend.begin_record("r1")
        assert len(backend.segment(rand_image(rng, 8, 8))) == 3


class TestHttpBackend:
    def test_unreachable_host_raises(self, rng):
        backend = HttpBackend("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(BackendUnavailable):
            backend.segment(rand_image(rng, 4, 4))

    def test_non_200_raises(self, rng, monkeypatch):
        backend = HttpBackend("http://example.invalid")

        class FakeResp:
            status_code = 500
            text = "boom"

        monkeypatch.setattr(backend.session, "post", lambda *a, **k: FakeResp())
        with pytest.raises(BackendUnavailable):
            backend.score(rand_image(rng, 2, 2), rect_mask(2, 2, 0, 0, 1, 1), "t")

    def test_missing_version_raises(self, rng, monkeypatch):
        backend = HttpBackend("http://example.invalid")

        class FakeResp:
            status_code = 200
            text = "{}"

            @staticmethod
            def json():
                return {"score": 0.5}

        monkeypatch.setattr(backend.session, "post", lambda *a, **k: FakeResp())
        with pytest.raises(BackendUnavailable):
            backend.score(rand_image(rng, 2, 2), rect_mask(2, 2, 0, 0, 1, 1), "t")


class TestMakeBackend:
    def test_specs(self, tmp_path):
        assert isinstance(make_backend("mock"), MockBackend)
        script = tmp_path / "s.json"
        script.write_text(json.dumps(SCRIPT))
        assert isinstance(make_backend(f"mock:{script}"), MockBackend)
        assert isinstance(make_backend("http://localhost:9"), HttpBackend)
        with pytest.raises(ValueError):
            make_backend("carrier-pigeon")
