"""Backend selection for the hot kernels.

Set ``IRSNET_DISABLE_NUMBA=1`` to force the vectorised numpy code paths.
When numba is not importable the numpy paths are used automatically. The
numba kernels are still compiled on demand when numba exists, so the
benchmark can compare both paths inside one process.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_disabled = os.environ.get("IRSNET_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

USE_NUMBA = HAVE_NUMBA and not _disabled
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
