"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set MIMOSOUNDER_PURE_PYTHON=1 to force the fallback (used by the parity
tests and the benchmark).
"""

import os

from . import kernels_py

if os.environ.get("MIMOSOUNDER_PURE_PYTHON"):
    _backend = kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _backend = kernels_py
        BACKEND = "python"

ray_accumulate = _backend.ray_accumulate
clip_quantize = _backend.clip_quantize

__all__ = ["BACKEND", "ray_accumulate", "clip_quantize", "kernels_py"]
