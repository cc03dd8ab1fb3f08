"""Backend selection for the hot simulation kernels.

``LEVY_NEUMANN_BACKEND=numpy`` forces the vectorized numpy path even when
numba is importable; ``numba`` (the default) uses the jitted kernels.
"""

import os

try:
    from numba import njit as _numba_njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

ENV_VAR = "LEVY_NEUMANN_BACKEND"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]

    def decorator(func):
        return func
    return decorator


def backend(name=None):
    """Resolve the backend name: explicit argument, then env var, then default."""
    name = name or os.environ.get(ENV_VAR, "numba")
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name
