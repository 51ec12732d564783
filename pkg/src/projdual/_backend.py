"""Kernel backend selection.

Set ``PROJDUAL_BACKEND=numpy`` to force the pure-numpy kernels; the default
uses numba when it can be imported.
"""
import os
import warnings

_requested = os.environ.get("PROJDUAL_BACKEND", "numba").strip().lower()

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
    # an outdated system TBB only means numba falls back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested != "numpy"


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
