"""Select the compiled kernel module or its numpy fallback at import time.

Set ``HELIO2D_PURE_PYTHON=1`` to force the fallback.
"""
import importlib
import logging
import os

log = logging.getLogger(__name__)


def load(name=None):
    """Return the kernel module ``"cython"`` or ``"python"`` (default: best available)."""
    if name == "python":
        return importlib.import_module("helio2d._fallback")
    if name == "cython":
        return importlib.import_module("helio2d._kernels")
    if os.environ.get("HELIO2D_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
        return load("python")
    try:
        return load("cython")
    except ImportError:
        log.info("compiled kernels unavailable, using numpy fallback")
        return load("python")


impl = load()
NAME = "cython" if impl.__name__.endswith("_kernels") else "python"
