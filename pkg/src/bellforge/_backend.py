"""Backend selection for the numeric kernels.

Set ``BELLFORGE_NUMBA=0`` to dispatch to the pure-numpy kernels.  Numba is
also skipped when it cannot be imported.  Both variants stay importable so
they can be compared side by side.
"""

import os

_flag = os.environ.get("BELLFORGE_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = _wanted and HAVE_NUMBA


def njit(*args, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` when available, identity otherwise."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)

    def wrap(fn):
        if _njit is None:
            return fn
        return _njit(**kwargs)(fn)

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


def default_jobs() -> int:
    env = os.environ.get("BELLFORGE_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
