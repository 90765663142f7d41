"""Optional numba acceleration.

Set ``THERMOSAFE_NO_NUMBA=1`` in the environment to run every kernel through
the plain numpy/python path instead.  The flag is read once at import time.
"""

import logging
import os

logger = logging.getLogger(__name__)

NUMBA_DISABLED = os.environ.get("THERMOSAFE_NO_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    if NUMBA_DISABLED:
        raise ImportError("disabled by THERMOSAFE_NO_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError as exc:
    logger.debug("numba unavailable, using python kernels: %s", exc)
    numba = None
    HAVE_NUMBA = False


def njit(pyfunc=None, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""

    def wrap(func):
        if HAVE_NUMBA:
            return numba.njit(**kwargs)(func)
        return func

    return wrap if pyfunc is None else wrap(pyfunc)
