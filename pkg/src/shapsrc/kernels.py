"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``SHAPSRC_PURE=1`` to force the numpy implementations.
"""

import os

from . import _kernels_py

if os.environ.get("SHAPSRC_PURE") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

shapley_from_table = _impl.shapley_from_table
bootstrap_not_better = _impl.bootstrap_not_better
nb_predict = _impl.nb_predict
centroid_predict = _impl.centroid_predict


def backends():
    """Map of available backend name to module, for tests and benchmarks."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
