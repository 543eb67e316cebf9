"""Numerical core: compiled kernels with a pure-Python fallback.

The Cython extension is used when it was built; set
``CODECBENCH_PURE_PYTHON=1`` to force the fallback (the benchmark and the
equivalence tests do this per call through ``get_backend``).
"""

import os

from . import fallback

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def get_backend(name=None):
    """Return the kernel module for ``name`` ("compiled", "python" or None=auto)."""
    if name == "python":
        return fallback
    if name == "compiled":
        if compiled is None:
            raise ImportError("codecbench._core._kernels is not built")
        return compiled
    if compiled is None or os.environ.get("CODECBENCH_PURE_PYTHON"):
        return fallback
    return compiled


BACKEND = "compiled" if get_backend() is compiled else "python"
