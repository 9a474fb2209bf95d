"""Backend selection for the hot loops.

The compiled extension is preferred; set ``WILDREFIT_PURE_PYTHON=1`` to force
the pure-Python fallback (used by the parity tests and the benchmark).
"""

import os

from . import _pykernels

BACKEND = "python"
tv1d_denoise = _pykernels.tv1d_denoise
pav_increasing = _pykernels.pav_increasing
tridiag_solve = _pykernels.tridiag_solve

if os.environ.get("WILDREFIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    if _ckernels is not None:
        BACKEND = "cython"
        tv1d_denoise = _ckernels.tv1d_denoise
        pav_increasing = _ckernels.pav_increasing
        tridiag_solve = _ckernels.tridiag_solve

__all__ = ["BACKEND", "tv1d_denoise", "pav_increasing", "tridiag_solve"]
