"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the vectorized
pure-Python fallback is used.  Set ``MALAB_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("MALAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

if compiled_backend is not None:
    BACKEND = "cython"
    _impl = compiled_backend
else:
    BACKEND = "python"
    _impl = python_backend

envelope_sweeps = _impl.envelope_sweeps
conjugate_sweep = _impl.conjugate_sweep


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None)."""
    if name is None:
        return _impl
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not built")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")

__all__ = ["BACKEND", "envelope_sweeps", "conjugate_sweep", "get_backend"]
