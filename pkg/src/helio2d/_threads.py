"""Worker-thread count shared by the library and the command line."""
import os
import sys

_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
_count = None


def resolve(requested=None) -> int:
    """Explicit value, else ``HELIO2D_THREADS``, else the number of CPUs."""
    if requested is None:
        env = os.environ.get("HELIO2D_THREADS")
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValueError(f"HELIO2D_THREADS must be an integer, got {env!r}") from None
    if requested is None:
        requested = os.cpu_count() or 1
    if requested < 1:
        raise ValueError("thread count must be >= 1")
    return int(requested)


def configure(requested=None) -> int:
    """Fix the thread count; BLAS pools are only affected if numpy is not loaded yet."""
    global _count
    _count = resolve(requested)
    if "numpy" not in sys.modules:
        for var in _ENV_VARS:
            os.environ[var] = str(_count)
    return _count


def get() -> int:
    return _count if _count is not None else resolve()
