"""Hot loops, compiled when the Cython extension is built.

Set ``ATOMJUNCTION_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("ATOMJUNCTION_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

deadtime_filter = _impl.deadtime_filter
deadtime_bin = _impl.deadtime_bin

__all__ = ["BACKEND", "deadtime_filter", "deadtime_bin"]
