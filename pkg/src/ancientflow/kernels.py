"""Backend selection for the numerical kernels.

The compiled extension ``_kernels`` is used when it imports; otherwise the
numpy implementation in ``_kernels_py`` is used. Set the environment
variable ``ANCIENTFLOW_BACKEND=python`` to force the fallback.
"""
import importlib
import os

__all__ = [
    "BACKEND",
    "get_backend",
    "set_backend",
    "segment_lengths",
    "laplacian",
    "cyclic_tridiag_solve",
    "periodic_spline_m2",
    "periodic_spline_eval",
    "equal_chord_resample",
]


def get_backend(name):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name == "cython":
        return importlib.import_module("ancientflow._kernels")
    if name == "python":
        return importlib.import_module("ancientflow._kernels_py")
    raise ValueError(f"unknown backend {name!r}")


def _select():
    if os.environ.get("ANCIENTFLOW_BACKEND", "").lower() == "python":
        return "python", get_backend("python")
    try:
        return "cython", get_backend("cython")
    except ImportError:
        return "python", get_backend("python")


_NAMES = ("segment_lengths", "laplacian", "cyclic_tridiag_solve", "periodic_spline_m2",
          "periodic_spline_eval", "equal_chord_resample")


def _bind(name, module):
    global BACKEND
    BACKEND = name
    for fn in _NAMES:
        globals()[fn] = getattr(module, fn)


def set_backend(name):
    """Switch every kernel to backend ``name``; returns the previous name."""
    previous = BACKEND
    _bind(name, get_backend(name))
    return previous


BACKEND = None
_bind(*_select())
