"""Pick the kernel implementation once, at import time.

Set ``ADAVOL_PURE_PYTHON=1`` to force the interpreted kernels even when the
compiled extension is available.
"""

import os

from . import _pykernels

if os.environ.get("ADAVOL_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"

VAR_FLOOR = _pykernels.VAR_FLOOR

__all__ = ["kernels", "BACKEND", "VAR_FLOOR"]
