"""Kernel backend selection.

The compiled extension is preferred; set ``TSVF_PURE_PYTHON=1`` to force the
numpy fallback (the benchmark and the cross-backend tests do this).
"""

import os

if os.environ.get("TSVF_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        from . import _pykernels as kernels

BACKEND: str = kernels.BACKEND


def available_backends() -> dict:
    """Map of backend name to kernel module for every importable backend."""
    from . import _pykernels

    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
