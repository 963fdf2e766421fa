"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``ADVPATH_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
value_sweeps = _fallback.value_sweeps
smo_solve = _fallback.smo_solve

if os.environ.get("ADVPATH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        value_sweeps = _kernels.value_sweeps
        smo_solve = _kernels.smo_solve
