"""Backend selection for the hot reduction kernels.

Set RQDET_BACKEND=numpy to force the pure-numpy einsum path, or
RQDET_BACKEND=numba for the jit-compiled loops.  Default is numba when it
imports, numpy otherwise.  The flag is read on every call so benchmarks and
tests can flip it at runtime.
"""

import os

VALID_BACKENDS = ("numba", "numpy")


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend() -> str:
    choice = os.environ.get("RQDET_BACKEND", "").strip().lower()
    if choice:
        if choice not in VALID_BACKENDS:
            raise ValueError(
                f"RQDET_BACKEND must be one of {VALID_BACKENDS}, got {choice!r}"
            )
        if choice == "numba" and not numba_available():
            raise ImportError("RQDET_BACKEND=numba but numba is not importable")
        return choice
    return "numba" if numba_available() else "numpy"
