"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

The backend is chosen once at import time. Set ``RETAIL_PROFILER_KERNELS`` to
``cython`` or ``python`` to force a backend (``auto``/unset picks the compiled
one when it imports cleanly). ``BACKEND`` reports the active choice.

Both backends implement the same three operations on C-contiguous float64
arrays; the wrappers here own input coercion and validation so the backends
stay interchangeable.
"""

from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("RETAIL_PROFILER_KERNELS", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from retail_profiler import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from retail_profiler import _kernels_py as _impl

        BACKEND = "python"
elif _requested in ("cython", "compiled", "c"):
    from retail_profiler import _kernels as _impl

    BACKEND = "cython"
elif _requested in ("python", "numpy", "pure"):
    from retail_profiler import _kernels_py as _impl

    BACKEND = "python"
else:
    raise ImportError(
        f"RETAIL_PROFILER_KERNELS={_requested!r} not understood; use 'cython', 'python' or 'auto'"
    )


def _as_rows(raw) -> np.ndarray:
    arr = np.ascontiguousarray(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d (rows, months) array, got ndim={arr.ndim}")
    return arr


def accumulate_distance_curve(raw, target) -> np.ndarray:
    """Distance of the running (normalized) row sum to ``target`` after each row.

    ``raw[i]`` is appended to a running monthly sum at step i; the sum is
    normalized to unit mean and its RMSD to the target recorded. Every prefix
    must have positive total demand, which holds whenever each row does.
    """
    arr = _as_rows(raw)
    t = np.ascontiguousarray(target, dtype=np.float64)
    if t.shape != (arr.shape[1],):
        raise ValueError("target length does not match the row width")
    if arr.shape[0] and not np.all(arr.sum(axis=1) > 0.0):
        raise ValueError("every row must have positive total demand")
    out = np.empty(arr.shape[0], dtype=np.float64)
    _impl.accumulate_distance_curve(arr, t, out)
    return out


def normalized_rmsd(raw, target) -> np.ndarray:
    """Per-row RMSD of the row's unit-mean shape to a target.

    ``target`` is either a single profile, shared by all rows, or one profile
    per row (same shape as ``raw``).
    """
    arr = _as_rows(raw)
    t = np.ascontiguousarray(target, dtype=np.float64)
    if arr.shape[0] and not np.all(arr.sum(axis=1) > 0.0):
        raise ValueError("every row must have positive total demand")
    out = np.empty(arr.shape[0], dtype=np.float64)
    if t.ndim == 1:
        if t.shape != (arr.shape[1],):
            raise ValueError("target length does not match the row width")
        _impl.normalized_rmsd_single(arr, t, out)
    elif t.shape == arr.shape:
        _impl.normalized_rmsd_rows(arr, t, out)
    else:
        raise ValueError(f"target shape {t.shape} matches neither a profile nor the rows")
    return out
