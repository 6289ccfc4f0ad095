"""Backend selection for the block kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``PBIHARMONIC_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used.
"""
import os

from . import _kernels_py

if os.environ.get("PBIHARMONIC_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
gather = _impl.gather
scatter = _impl.scatter
gram = _impl.gram
nonlinearity = _impl.nonlinearity

__all__ = ["BACKEND", "gather", "scatter", "gram", "nonlinearity"]
