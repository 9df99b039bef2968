"""Optional numba acceleration.

Hot kernels are decorated with :func:`jit`.  Setting the environment variable
``FILTERCAST_DISABLE_NUMBA=1`` (or running without numba installed) leaves them
as plain Python/numpy functions.  The flag is read once, at import time.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_REQUESTED = os.environ.get("FILTERCAST_DISABLE_NUMBA", "").strip().lower() in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = NUMBA_REQUESTED and numba is not None


def jit(func):
    """Compile ``func`` in nopython mode when acceleration is enabled."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def choose(accelerated, fallback):
    """Return the compiled loop kernel, or the vectorised numpy fallback."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(accelerated)
    return fallback


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
