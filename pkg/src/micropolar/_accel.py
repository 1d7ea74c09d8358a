"""Optional numba acceleration.

Set ``MICROPOLAR_DISABLE_NUMBA=1`` to force the pure-numpy code paths.
When numba is missing the fallback is used silently.
"""

import os

_DISABLED = os.environ.get("MICROPOLAR_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
