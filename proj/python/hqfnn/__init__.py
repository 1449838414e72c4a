"""Python bindings for the hybrid quantum-fuzzy classifier core."""

from ._hqfnn import *  # noqa: F401,F403
from ._hqfnn import ConsistencyError, FormatError, ModelConfig, ModelParams

__all__ = [name for name in dir() if not name.startswith("_")]
