"""Selects the compute backend for the hot Monte-Carlo kernels.

The numba path is used when numba imports cleanly and ``DPAUDIT_DISABLE_NUMBA``
is unset (or "0"). Setting ``DPAUDIT_DISABLE_NUMBA=1`` forces the pure-numpy
path. Both paths produce the same tallies; see ``benchmarks/bench_backends.py``.
"""

import os

_disabled = os.environ.get("DPAUDIT_DISABLE_NUMBA", "0").strip().lower() not in (
    "",
    "0",
    "false",
    "no",
)

try:
    if _disabled:
        raise ImportError("numba disabled via DPAUDIT_DISABLE_NUMBA")
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy") if HAVE_NUMBA else ("numpy",)
DEFAULT_BACKEND = BACKENDS[0]


def resolve(backend=None):
    """Return a valid backend name, defaulting to the fastest available one."""
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; choose from {BACKENDS}")
    return backend
