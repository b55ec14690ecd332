"""Backend selection for the hot kernels.

``MCFSE_BACKEND=numpy`` forces the pure-numpy code paths even when numba is
installed; ``MCFSE_BACKEND=numba`` (the default when numba imports) uses the
compiled kernels. ``FSE_THREADS`` caps numba's thread pool.
"""

import os

BACKEND_ENV = "MCFSE_BACKEND"
THREADS_ENV = "FSE_THREADS"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False


def _requested_backend():
    value = os.environ.get(BACKEND_ENV, "").strip().lower()
    if value in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAS_NUMBA:
        raise ImportError(f"{BACKEND_ENV}=numba but numba is not installed")
    return value


BACKEND = _requested_backend()
USE_NUMBA = BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Kernels are always compiled when numba exists so the benchmark can compare
    both paths in one process; ``USE_NUMBA`` only decides which one callers
    dispatch to.
    """
    bare = len(args) == 1 and callable(args[0]) and not kwargs
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if bare:
        return args[0]
    return lambda fn: fn


prange = numba.prange if HAS_NUMBA else range


def configure_threads():
    raw = os.environ.get(THREADS_ENV)
    if not raw or not HAS_NUMBA:
        return
    n = max(1, int(raw))
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


configure_threads()
