"""Kernel backend selection.

The compiled numba kernels are used when numba imports and the environment
variable ``RDPGLINK_BACKEND`` is unset or ``numba``. Setting it to ``numpy``
selects the vectorized pure-numpy kernels.
"""

import contextlib
import importlib
import os

ENV_VAR = "RDPGLINK_BACKEND"
BACKENDS = ("numba", "numpy")


def _default_backend():
    requested = os.environ.get(ENV_VAR, "numba").strip().lower() or "numba"
    if requested not in BACKENDS:
        raise ValueError(f"{ENV_VAR} must be one of {BACKENDS}, got {requested!r}")
    if requested == "numba":
        try:
            importlib.import_module("numba")
        except ImportError:
            return "numpy"
    return requested


_backend = _default_backend()
_modules = {}


def backend_name():
    return _backend


def kernels(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    name = name or _backend
    mod = _modules.get(name)
    if mod is None:
        mod = importlib.import_module(f"rdpglink._kernels_{name}")
        _modules[name] = mod
    return mod


def set_backend(name):
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    kernels(name)
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield kernels(name)
    finally:
        set_backend(previous)
