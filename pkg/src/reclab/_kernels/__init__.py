"""Hot-loop kernels with two interchangeable backends.

The numba backend compiles per-step loops; the numpy backend vectorizes the
same integer arithmetic (blocked matrix powers, lane-parallel bit windows,
Horner digit sweeps).  Both produce bitwise-identical uint64 outputs, so the
choice only affects speed.

Selection: environment variable RECLAB_BACKEND in {"auto", "numba", "numpy"},
read lazily on first use.  "auto" (default) picks numba when importable.
"""

from __future__ import annotations

import os

_BACKEND = None
_BACKEND_NAME = None


def _load(name: str):
    if name == "numpy":
        from . import numpy_backend

        return numpy_backend, "numpy"
    if name == "numba":
        from . import numba_backend

        return numba_backend, "numba"
    if name == "auto":
        try:
            from . import numba_backend

            return numba_backend, "numba"
        except ImportError:
            from . import numpy_backend

            return numpy_backend, "numpy"
    raise ValueError(f"RECLAB_BACKEND must be auto, numba or numpy, got {name!r}")


def backend():
    """The active kernel module (resolves the env flag on first call)."""
    global _BACKEND, _BACKEND_NAME
    if _BACKEND is None:
        _BACKEND, _BACKEND_NAME = _load(os.environ.get("RECLAB_BACKEND", "auto").strip().lower())
    return _BACKEND


def backend_name() -> str:
    backend()
    return _BACKEND_NAME


def reset_backend() -> None:
    """Forget the cached choice (tests flip RECLAB_BACKEND at runtime)."""
    global _BACKEND, _BACKEND_NAME
    _BACKEND = None
    _BACKEND_NAME = None


def toral_orbit_positions(v0, amat, n):
    return backend().toral_orbit_positions(v0, amat, n)


def toral_return_time(v0, amat, thr, cap):
    return backend().toral_return_time(v0, amat, thr, cap)


def shift_orbit_positions(queue, fresh, m):
    return backend().shift_orbit_positions(queue, fresh, m)


def shift_return_scan(queue, fresh, thr, k_offset, start_view, m):
    return backend().shift_return_scan(queue, fresh, thr, k_offset, start_view, m)
