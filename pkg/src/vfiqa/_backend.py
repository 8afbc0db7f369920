"""Pick the kernel implementation at import time.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``VFIQA_BACKEND=python`` forces the fallback.
"""
import contextlib
import os

from vfiqa import _pykernels

try:
    from vfiqa import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels


def _default():
    requested = os.environ.get("VFIQA_BACKEND", "").strip().lower()
    if requested == "python" or _ckernels is None:
        return "python"
    return "compiled"


_active = _default()


def name():
    return _active


def kernels():
    return BACKENDS[_active]


def available():
    return sorted(BACKENDS)


def set_backend(backend):
    global _active
    if backend == "auto":
        backend = _default()
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} not available (have: {', '.join(available())})")
    _active = backend


@contextlib.contextmanager
def use_backend(backend):
    previous = _active
    set_backend(backend)
    try:
        yield kernels()
    finally:
        set_backend(previous)
