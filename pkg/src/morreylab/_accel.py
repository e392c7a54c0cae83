"""Numba acceleration switch.

Hot kernels in :mod:`morreylab.kernels` exist in two variants: a numba
``@njit`` loop version and a vectorized pure-numpy version.  The numba path
is the default; set the environment variable ``MORREYLAB_NO_NUMBA=1`` before
import to force the numpy fallback (also used automatically when numba is
not importable).  Both paths are written to produce bitwise-identical
results; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

_env_off = os.environ.get("MORREYLAB_NO_NUMBA", "").strip() not in ("", "0")

if not _env_off:
    try:
        from numba import njit  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):  # noqa: D103 - decorator stub, numpy-only mode
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def use_numba(override=None):
    """Resolve the backend choice: explicit override wins, else the env default."""
    if override is None:
        return NUMBA_ENABLED
    return bool(override) and NUMBA_ENABLED
