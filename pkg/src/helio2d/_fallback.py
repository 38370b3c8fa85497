"""Pure-numpy implementations of the compiled kernels in ``_kernels.pyx``.

Same algorithms, same signatures; used when the extension is not built or
when ``HELIO2D_PURE_PYTHON=1``.
"""
import numpy as np

EULER = 0.57721566490153286061
SERIES_MAX = 2.0
ASYMPTOTIC_MIN = 25.0
MAX_START = 160


def _series(x):
    q = 0.25 * x * x
    t0 = np.ones_like(x)
    t1 = np.ones_like(x)
    s_j0 = np.ones_like(x)
    s_j1 = np.ones_like(x)
    s_y0 = np.zeros_like(x)
    s_y1 = np.full_like(x, (-EULER) + (1.0 - EULER))
    harm = 0.0
    k = 0
    while True:
        k += 1
        t0 = t0 * (-q / (k * k))
        t1 = t1 * (-q / (k * (k + 1.0)))
        harm += 1.0 / k
        s_j0 += t0
        s_y0 -= t0 * harm
        s_j1 += t1
        s_y1 += t1 * (2.0 * (harm - EULER) + 1.0 / (k + 1.0))
        if np.all(np.abs(t0) < 1e-18) and np.all(np.abs(t1) < 1e-18):
            break
    j1 = 0.5 * x * s_j1
    y0 = (2.0 / np.pi) * ((np.log(0.5 * x) + EULER) * s_j0 + s_y0)
    y1 = -2.0 / (np.pi * x) + (2.0 / np.pi) * np.log(0.5 * x) * j1 - x / (2.0 * np.pi) * s_y1
    return s_j0, j1, y0, y1


def _miller(x):
    ns = int(x.max() + 10.0 + 10.0 * x.max() ** (1.0 / 3.0))
    ns = min(ns + ns % 2, MAX_START)
    fp = np.zeros_like(x)
    f = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    # f_{2k+1} is needed when f_{2k-1} arrives; keep it around
    f_odd_above = np.zeros_like(x)
    for n in range(ns, 0, -1):
        fm = (2.0 * n / x) * f - fp
        fp, f = f, fm
        m = n - 1
        if m % 2 == 0 and m > 0:
            kk = m // 2
            norm += 2.0 * f
            s0 += (f / kk) if kk % 2 == 0 else (-f / kk)
        elif m % 2 == 1:
            # m = 2kk - 1 pairs with f_{2kk+1}
            kk = (m + 1) // 2
            if kk <= ns // 2:
                d = f - f_odd_above
                s1 += (d / kk) if kk % 2 == 0 else (-d / kk)
            f_odd_above = f
    norm = 1.0 / (norm + f)
    lg = np.log(0.5 * x) + EULER
    j0 = f * norm
    j1 = fp * norm
    y0 = (2.0 / np.pi) * lg * j0 - (4.0 / np.pi) * s0 * norm
    y1 = (2.0 / np.pi) * (lg * j1 - j0 / x) + (2.0 / np.pi) * s1 * norm
    return j0, j1, y0, y1


def _asymptotic(x):
    p0 = np.ones_like(x)
    p1 = np.ones_like(x)
    q0 = np.zeros_like(x)
    q1 = np.zeros_like(x)
    t0 = np.ones_like(x)
    t1 = np.ones_like(x)
    for k in range(1, 80):
        a = (2.0 * k - 1.0) ** 2
        t0 = t0 * ((0.0 - a) / (8.0 * k * x))
        t1 = t1 * ((4.0 - a) / (8.0 * k * x))
        sg = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2:
            q0 += sg * t0
            q1 += sg * t1
        else:
            p0 += sg * t0
            p1 += sg * t1
        if np.all(np.abs(t0) < 1e-17) and np.all(np.abs(t1) < 1e-17):
            break
    c = np.cos(x)
    s = np.sin(x)
    r2 = np.sqrt(0.5)
    amp = np.sqrt(2.0 / (np.pi * x))
    c0, s0 = (c + s) * r2, (s - c) * r2
    c1, s1 = (s - c) * r2, -(s + c) * r2
    return (amp * (p0 * c0 - q0 * s0), amp * (p1 * c1 - q1 * s1),
            amp * (p0 * s0 + q0 * c0), amp * (p1 * s1 + q1 * c1))


CHEB_LO = SERIES_MAX
CHEB_WIDTH = 0.5
CHEB_DEG = 15
CHEB_PANELS = int(round((ASYMPTOTIC_MIN - SERIES_MAX) / CHEB_WIDTH))


def _chebyshev_table():
    """Per-panel Chebyshev coefficients of J0, J1, Y0, Y1 on (2, 25]."""
    n = CHEB_DEG + 1
    theta = np.pi * (np.arange(n) + 0.5) / n
    nodes = np.cos(theta)
    table = np.empty((CHEB_PANELS, 4, n))
    for p in range(CHEB_PANELS):
        a = CHEB_LO + p * CHEB_WIDTH
        x = a + 0.5 * CHEB_WIDTH * (nodes + 1.0)
        vals = np.array([_miller(np.array([xi])) for xi in x])[:, :, 0]  # (n, 4)
        for q in range(4):
            c = 2.0 / n * np.cos(np.outer(np.arange(n), theta)) @ vals[:, q]
            c[0] *= 0.5
            table[p, q] = c
    return table


_TABLE = _chebyshev_table()
_TABLE_BY_DEGREE = np.ascontiguousarray(_TABLE.transpose(2, 0, 1))  # (deg+1, panels, 4)


def _chebyshev(x):
    p = np.minimum(((x - CHEB_LO) / CHEB_WIDTH).astype(np.int64), CHEB_PANELS - 1)
    t = 2.0 * (x - (CHEB_LO + p * CHEB_WIDTH)) / CHEB_WIDTH - 1.0
    b1 = np.zeros((x.size, 4))
    b2 = np.zeros((x.size, 4))
    tt = 2.0 * t[:, None]
    for j in range(CHEB_DEG, 0, -1):
        b1, b2 = tt * b1 - b2 + _TABLE_BY_DEGREE[j][p], b1
    res = 0.5 * tt * b1 - b2 + _TABLE_BY_DEGREE[0][p]
    return res[:, 0], res[:, 1], res[:, 2], res[:, 3]


def bessel01(x):
    """J0, J1, Y0, Y1 for a positive float64 array (no domain checks)."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    out = np.empty((4, flat.size))
    regimes = (
        (flat <= SERIES_MAX, _series),
        ((flat > SERIES_MAX) & (flat <= ASYMPTOTIC_MIN), _chebyshev),
        (flat > ASYMPTOTIC_MIN, _asymptotic),
    )
    for mask, fn in regimes:
        if mask.any():
            out[:, mask] = fn(flat[mask])
    return tuple(out[i].reshape(x.shape) for i in range(4))


def kernel_block(k, tx, ty, tnx, tny, sx, sy, snx, sny, c_s, c_d, c_sp):
    """Combination c_s*G + c_d*dG/dnu(y) + c_sp*dG/dnu(x), targets x rows.

    Coincident target/source pairs are returned as 0.
    """
    tx, ty, tnx, tny = (np.asarray(a, dtype=np.float64)[:, None] for a in (tx, ty, tnx, tny))
    sx, sy, snx, sny = (np.asarray(a, dtype=np.float64)[None, :] for a in (sx, sy, snx, sny))
    dx = tx - sx
    dy = ty - sy
    r = np.hypot(dx, dy)
    zero = r == 0.0
    r = np.where(zero, 1.0, r)
    j0, j1, y0, y1 = bessel01(k * r)
    out = c_s * 0.25j * (j0 + 1j * y0) if c_s != 0 else np.zeros(r.shape, dtype=complex)
    if c_d != 0 or c_sp != 0:
        dgr = 0.25j * k * (j1 + 1j * y1) / r
        out = out + dgr * (c_d * (snx * dx + sny * dy) - c_sp * (tnx * dx + tny * dy))
    out[zero] = 0.0
    return np.ascontiguousarray(out, dtype=np.complex128)


def kernel_square_t(k, x, y, nx, ny, c_s, c_d, c_sp, out):
    out[...] = kernel_block(k, x, y, nx, ny, x, y, nx, ny, c_s, c_d, c_sp).T


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_box(ax, ay, bx, by, px, py):
    return ((np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by)))


def polygon_is_simple(px, py, eps):
    """Naive O(n^2) test that a closed polygon has no self-intersections."""
    x = np.asarray(px, dtype=np.float64)
    y = np.asarray(py, dtype=np.float64)
    n = x.size
    x1 = np.roll(x, -1)
    y1 = np.roll(y, -1)
    x2 = np.roll(x, -2)
    y2 = np.roll(y, -2)
    fold = (np.abs(_orient(x, y, x1, y1, x2, y2)) <= eps) & (
        (x1 - x) * (x2 - x1) + (y1 - y) * (y2 - y1) < 0.0)
    if fold.any():
        return False
    idx = np.arange(n)
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        i = idx[start:start + chunk, None]
        j = idx[None, :]
        # non-adjacent pairs with j > i
        valid = (j >= i + 2) & ~((i == 0) & (j == n - 1))
        ax, ay, bx, by = x[i], y[i], x1[i], y1[i]
        cx, cy, dx, dy = x[j], y[j], x1[j], y1[j]
        valid &= ~((np.maximum(cx, dx) < np.minimum(ax, bx)) | (np.minimum(cx, dx) > np.maximum(ax, bx))
                   | (np.maximum(cy, dy) < np.minimum(ay, by)) | (np.minimum(cy, dy) > np.maximum(ay, by)))
        if not valid.any():
            continue
        ii, jj = np.nonzero(valid)
        ii = ii + start
        ax, ay, bx, by = x[ii], y[ii], x1[ii], y1[ii]
        cx, cy, dx, dy = x[jj], y[jj], x1[jj], y1[jj]
        o1 = _orient(ax, ay, bx, by, cx, cy)
        o2 = _orient(ax, ay, bx, by, dx, dy)
        o3 = _orient(cx, cy, dx, dy, ax, ay)
        o4 = _orient(cx, cy, dx, dy, bx, by)
        o1, o2, o3, o4 = (np.where(np.abs(o) <= eps, 0.0, o) for o in (o1, o2, o3, o4))
        hit = (o1 * o2 < 0.0) & (o3 * o4 < 0.0)
        hit |= (o1 == 0.0) & _on_box(ax, ay, bx, by, cx, cy)
        hit |= (o2 == 0.0) & _on_box(ax, ay, bx, by, dx, dy)
        hit |= (o3 == 0.0) & _on_box(cx, cy, dx, dy, ax, ay)
        hit |= (o4 == 0.0) & _on_box(cx, cy, dx, dy, bx, by)
        if hit.any():
            return False
    return True
