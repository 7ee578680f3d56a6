"""Kernel backend selection.

The density evaluations inside the bound search dominate runtime, so they
live in a compiled extension (``windband._core``) with a numpy twin
(``windband._core_py``) used when the extension was not built. Selection
happens at import; ``WINDBAND_KERNEL=numpy|cython`` forces a backend.

High-level code must call ``kernels.mixture_pdf(...)`` through the module
attribute so that :func:`set_backend` (used by tests and the benchmark)
takes effect.
"""

import os

from . import _core_py

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"numpy": _core_py}
if _core is not None:
    _BACKENDS["cython"] = _core

_active_name = None
mixture_pdf = None


def available_backends():
    return tuple(sorted(_BACKENDS))


def backend_name():
    return _active_name


def set_backend(name):
    """Switch the active kernel backend. Not thread-safe; intended for
    tests and benchmarks."""
    global _active_name, mixture_pdf
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {available_backends()}")
    _active_name = name
    mixture_pdf = _BACKENDS[name].mixture_pdf


_requested = os.environ.get("WINDBAND_KERNEL")
if _requested:
    set_backend(_requested)
else:
    set_backend("cython" if _core is not None else "numpy")
