"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is loaded.  Setting the environment
variable ``FEI_LAB_PURE=1`` forces the numpy backend.
"""

import os

from fei_lab import _pykernels

if os.environ.get("FEI_LAB_PURE"):
    _impl = _pykernels
else:
    try:
        from fei_lab import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

transform_batch = _impl.transform_batch
inverse_batch = _impl.inverse_batch
weights_batch = _impl.weights_batch
sweep_batch = _impl.sweep_batch


def available_backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _pykernels}
    try:
        from fei_lab import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
