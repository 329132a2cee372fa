"""Thin HTTP service exposing segmentation, scoring, validation, and
inpainting model backends over the shared JSON wire protocol."""

from .app import create_app
from .codec import PROTOCOL_VERSION
from .models import AdapterConfig, FakeSuite, ModelSuite

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "FakeSuite",
    "ModelSuite",
    "PROTOCOL_VERSION",
    "create_app",
    "__version__",
]
