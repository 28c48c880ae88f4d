"""Backend switch for the hot kernels.

Set ``DDPMINE_BACKEND=numpy`` to force the pure-numpy path. The default is
``numba`` when numba imports cleanly, otherwise numpy with a warning.
"""
import os
from warnings import warn

_requested = os.environ.get("DDPMINE_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"DDPMINE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    HAVE_NUMBA = False
    if _requested == "numba":
        warn("numba not importable; falling back to numpy kernels", RuntimeWarning)

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, else the identity decorator."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
