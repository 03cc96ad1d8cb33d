"""Kernel backend selection.

The compiled extension is used when it was built; setting
``TORIKAM_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
conv_accumulate = _pykernels.conv_accumulate

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

if _ckernels is not None and not os.environ.get("TORIKAM_PURE_PYTHON"):
    BACKEND = "cython"
    conv_accumulate = _ckernels.conv_accumulate


def available_backends():
    out = {"python": _pykernels.conv_accumulate}
    if _ckernels is not None:
        out["cython"] = _ckernels.conv_accumulate
    return out


def set_backend(name):
    """Switch the active kernels; returns the previous backend name."""
    global BACKEND, conv_accumulate
    impls = available_backends()
    if name not in impls:
        raise ValueError(f"backend {name!r} not available (have {sorted(impls)})")
    prev = BACKEND
    BACKEND, conv_accumulate = name, impls[name]
    return prev
