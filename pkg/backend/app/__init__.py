"""Joint CTC-attention person attribute recognition and re-identification."""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
