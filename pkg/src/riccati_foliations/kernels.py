"""Hot kernels, compiled when available.

The Cython extension is used when it imports; otherwise the numpy
implementation with the same signatures is used.  Setting the environment
variable ``RICCATI_FOLIATIONS_PURE=1`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("RICCATI_FOLIATIONS_PURE", "") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

segment_crossings = _impl.segment_crossings
walk = _impl.walk

__all__ = ["BACKEND", "segment_crossings", "walk"]
