"""Optional numba acceleration.

Hot kernels are written twice: a numba ``@njit`` version and a pure-numpy
version. The numba path is used when numba imports cleanly and the
environment variable ``RARPINN_NUMBA`` is not set to a false value
(``0``, ``false``, ``no``, ``off``). The flag is read at import time;
``use_numba(False)`` flips it at runtime (used by tests and the benchmark).
"""

import os

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def _env_enabled() -> bool:
    raw = os.environ.get("RARPINN_NUMBA", "1").strip().lower()
    return raw not in {"0", "false", "no", "off"}


_ENABLED = HAVE_NUMBA and _env_enabled()


def numba_enabled() -> bool:
    return _ENABLED


def use_numba(flag: bool) -> bool:
    """Enable or disable the numba path; returns the previous setting."""
    global _ENABLED
    previous = _ENABLED
    _ENABLED = bool(flag) and HAVE_NUMBA
    return previous


__all__ = ["HAVE_NUMBA", "njit", "numba_enabled", "use_numba"]
