"""Bessel functions of order 0 and 1 and the outgoing Helmholtz Green's function.

Three regimes: ascending series for x <= 2, Miller backward recurrence with
Neumann-series Y0/Y1 for 2 < x <= 25, Hankel asymptotic expansion above.
The evaluation itself lives in the compiled/fallback kernel module.
"""
import numpy as np

from ._backend import impl


class DomainError(ValueError):
    """Argument outside the domain where a function is defined."""


def bessel_j0j1y0y1(x):
    """Return ``(J0, J1, Y0, Y1)`` at ``x > 0`` (scalar or array)."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise DomainError("Bessel functions need finite x > 0")
    out = impl.bessel01(arr)
    if arr.ndim == 0:
        return tuple(float(v) for v in out)
    return out


def hankel01(x):
    """Hankel functions of the first kind ``(H0, H1)`` at ``x > 0``."""
    j0, j1, y0, y1 = bessel_j0j1y0y1(x)
    return j0 + 1j * y0, j1 + 1j * y1


def _separation(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    diff = x - y
    r = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(r == 0.0):
        raise DomainError("Green's function is singular at x == y")
    return diff, r


def green(k, x, y):
    """Outgoing Green's function ``(i/4) H0(k|x - y|)``."""
    _, r = _separation(x, y)
    h0, _ = hankel01(k * r)
    return 0.25j * h0


def green_grad(k, x, y):
    """Gradient of :func:`green` with respect to the source point ``y``.

    Returns an array with a trailing axis of length 2.
    """
    diff, r = _separation(x, y)
    _, h1 = hankel01(k * r)
    scale = 0.25j * k * h1 / r
    return np.asarray(scale)[..., None] * diff


def kernel_block(k, targets, sources, target_normals=None, source_normals=None,
                 c_s=1.0, c_d=0.0, c_sp=0.0):
    """Dense block ``c_s*G + c_d*dG/dnu(y) + c_sp*dG/dnu(x)``.

    ``targets`` and ``sources`` are ``(n, 2)`` arrays. Entries where a target
    coincides with a source are set to zero; callers replace them.
    """
    targets = np.asarray(targets, dtype=np.float64)
    sources = np.asarray(sources, dtype=np.float64)
    tn = np.zeros_like(targets) if target_normals is None else np.asarray(target_normals, dtype=np.float64)
    sn = np.zeros_like(sources) if source_normals is None else np.asarray(source_normals, dtype=np.float64)
    return impl.kernel_block(float(k), targets[:, 0], targets[:, 1], tn[:, 0], tn[:, 1],
                             sources[:, 0], sources[:, 1], sn[:, 0], sn[:, 1],
                             complex(c_s), complex(c_d), complex(c_sp))
