"""2D sound-soft Helmholtz scattering: forward solvers and shape reconstruction.

Submodules are imported on first use so the command-line front end can set
thread counts before numerical libraries load.
"""
import importlib

__version__ = "0.1.0"

_SUBMODULES = ("specfun", "curve", "quadrature", "potentials", "forward", "hodlr",
               "inverse", "rla", "synth", "cli")


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = list(_SUBMODULES) + ["__version__"]
