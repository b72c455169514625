"""Layer-kernel backend selection.

The compiled extension is used when importable; set ``DDORDER_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

import os

from . import _kernels_py

if os.environ.get("DDORDER_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or default)."""
    name = name or BACKEND
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run 'pip install -e .'")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])
