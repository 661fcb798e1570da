"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``PARALINGAM_BACKEND=python`` forces the fallback and
``PARALINGAM_BACKEND=compiled`` makes a missing extension an error.
"""

import contextlib
import importlib
import os

from . import _pykernels

_NAMES = {"compiled": "paralingam._ckernels", "python": "paralingam._pykernels"}


def _load_compiled():
    return importlib.import_module(_NAMES["compiled"])


def available_backends():
    names = []
    try:
        _load_compiled()
    except ImportError:
        pass
    else:
        names.append("compiled")
    names.append("python")
    return names


def _select():
    choice = os.environ.get("PARALINGAM_BACKEND", "").strip().lower()
    if choice == "python":
        return _pykernels
    try:
        return _load_compiled()
    except ImportError:
        if choice == "compiled":
            raise
        return _pykernels


kernels = _select()


def get_backend(name):
    if name not in _NAMES:
        raise ValueError(f"unknown backend {name!r}")
    return importlib.import_module(_NAMES[name])


def set_backend(name):
    global kernels
    kernels = get_backend(name)
    return kernels


@contextlib.contextmanager
def use_backend(name):
    global kernels
    previous = kernels
    kernels = get_backend(name)
    try:
        yield kernels
    finally:
        kernels = previous
