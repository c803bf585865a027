"""Audio anomaly detection pipeline (C++ core with Python bindings)."""

from ._audioad import *  # noqa: F401,F403
from ._audioad import AudioadError, Model  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
