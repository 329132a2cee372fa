import numpy as np
import pytest
from fastapi.testclient import TestClient

from backend_adapter.app import create_app
from backend_adapter.codec import array_to_b64png, bits_to_rle
from backend_adapter.models import AdapterConfig


@pytest.fixture
def client():
    return TestClient(create_app(AdapterConfig(fake=True)), raise_server_exceptions=False)


@pytest.fixture
def small_client():
    config = AdapterConfig(fake=True, max_image_side=32)
    return TestClient(create_app(config), raise_server_exceptions=False)


@pytest.fixture
def rng():
    return np.random.default_rng(77)


def make_image(rng, h=16, w=16, c=3) -> str:
    return array_to_b64png(rng.random((h, w, c)))


def make_mask(h=16, w=16, r0=4, c0=4, r1=12, c1=12) -> dict:
    bits = np.zeros((h, w), dtype=bool)
    bits[r0:r1, c0:c1] = True
    return bits_to_rle(bits)
