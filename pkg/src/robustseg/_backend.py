"""Kernel backend selection.

The compiled extension is used when importable. Set ``ROBUSTSEG_BACKEND``
to ``python`` to force the numpy fallback or to ``cython`` to fail loudly
when the extension is missing.
"""
import os

from . import _core_py

_requested = os.environ.get("ROBUSTSEG_BACKEND", "auto").lower()

if _requested == "python":
    kernels = _core_py
    BACKEND = "python"
else:
    try:
        from . import _core as kernels
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        kernels = _core_py
        BACKEND = "python"


def get_kernels(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` explicitly."""
    if name == "python":
        return _core_py
    if name == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
