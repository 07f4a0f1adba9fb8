"""Kernel backend selection: compiled extension if present, NumPy otherwise.

Set DENOISEBENCH_BACKEND=python or =cython to force a choice at import
time; :func:`select` switches at runtime (used by tests and benchmarks).
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _kernels  # compiled extension, built by setup.py
except ImportError:
    _kernels = None

_REQUIRED = (
    "nlm_denoise",
    "bm3d_block_match",
    "bm3d_hard_stage",
    "bm3d_wiener_stage",
    "omp_batch",
)

_BACKENDS = {"python": _pykernels}
if _kernels is not None and all(hasattr(_kernels, f) for f in _REQUIRED):
    _BACKENDS["cython"] = _kernels

_active = _pykernels


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def select(name: str):
    """Switch the active kernel backend; returns the backend module."""
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise RuntimeError(
            f"backend {name!r} not available (have {available_backends()})"
        ) from None
    return _active


def active_backend():
    return _active


def backend_name() -> str:
    return _active.BACKEND_NAME


_env = os.environ.get("DENOISEBENCH_BACKEND", "").strip().lower()
if _env:
    select(_env)
elif "cython" in _BACKENDS:
    select("cython")
