"""Standalone model host speaking the emotion-scoring wire protocol."""

from .app import create_app
from .model import ModelLoadError, StubModel, TableModel, load_model_from_env

__all__ = ["create_app", "ModelLoadError", "StubModel", "TableModel", "load_model_from_env"]

__version__ = "0.1.0"
