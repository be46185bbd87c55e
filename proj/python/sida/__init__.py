"""Structurally informed ETKF data assimilation for 2D hyperbolic PDEs."""

from ._core import *  # noqa: F401,F403
from . import _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
__version__ = "0.1.0"
