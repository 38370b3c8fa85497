# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Bessel/Hankel evaluation, Helmholtz kernel blocks and
the pairwise polygon segment test.

Every function here has a numpy twin in ``_fallback`` with the same signature.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, sin, fabs, M_PI

cnp.import_array()

cdef double EULER = 0.57721566490153286061
cdef double SERIES_MAX = 2.0
cdef double ASYMPTOTIC_MIN = 25.0
cdef int MAX_START = 160


cdef inline void _series(double x, double* j0, double* j1, double* y0, double* y1) noexcept nogil:
    cdef double q = 0.25 * x * x
    cdef double t0 = 1.0, t1 = 1.0
    cdef double s_j0 = 1.0, s_j1 = 1.0, s_y0 = 0.0
    cdef double s_y1 = (-EULER) + (1.0 - EULER)
    cdef double harm = 0.0, psi
    cdef int k = 0
    while True:
        k += 1
        t0 *= -q / (k * k)
        t1 *= -q / (k * (k + 1.0))
        harm += 1.0 / k
        s_j0 += t0
        s_y0 -= t0 * harm
        s_j1 += t1
        psi = 2.0 * (harm - EULER) + 1.0 / (k + 1.0)
        s_y1 += t1 * psi
        if fabs(t0) < 1e-18 and fabs(t1) < 1e-18:
            break
    j0[0] = s_j0
    j1[0] = 0.5 * x * s_j1
    y0[0] = (2.0 / M_PI) * ((log(0.5 * x) + EULER) * s_j0 + s_y0)
    y1[0] = (-2.0 / (M_PI * x) + (2.0 / M_PI) * log(0.5 * x) * j1[0]
             - x / (2.0 * M_PI) * s_y1)


cdef inline void _miller(double x, double* j0, double* j1, double* y0, double* y1) noexcept nogil:
    cdef double f[164]
    cdef int ns = <int>(x + 10.0 + 10.0 * x ** (1.0 / 3.0))
    cdef int n, kk
    cdef double norm, s0, s1, lg
    if ns % 2:
        ns += 1
    if ns > MAX_START:
        ns = MAX_START
    f[ns + 1] = 0.0
    f[ns] = 1e-30
    for n in range(ns, 0, -1):
        f[n - 1] = (2.0 * n / x) * f[n] - f[n + 1]
    norm = f[0]
    for kk in range(1, ns // 2 + 1):
        norm += 2.0 * f[2 * kk]
    norm = 1.0 / norm
    s0 = 0.0
    s1 = 0.0
    for kk in range(1, ns // 2 + 1):
        if kk % 2:
            s0 -= f[2 * kk] / kk
            s1 -= (f[2 * kk - 1] - f[2 * kk + 1]) / kk
        else:
            s0 += f[2 * kk] / kk
            s1 += (f[2 * kk - 1] - f[2 * kk + 1]) / kk
    lg = log(0.5 * x) + EULER
    j0[0] = f[0] * norm
    j1[0] = f[1] * norm
    y0[0] = (2.0 / M_PI) * lg * j0[0] - (4.0 / M_PI) * s0 * norm
    y1[0] = (2.0 / M_PI) * (lg * j1[0] - j0[0] / x) + (2.0 / M_PI) * s1 * norm


cdef inline void _asymptotic(double x, double* j0, double* j1, double* y0, double* y1) noexcept nogil:
    cdef double p0 = 1.0, q0 = 0.0, p1 = 1.0, q1 = 0.0
    cdef double t0 = 1.0, t1 = 1.0, a, sg
    cdef int k
    cdef double c = cos(x), s = sin(x), r2 = sqrt(0.5)
    cdef double amp = sqrt(2.0 / (M_PI * x))
    cdef double c0, s0, c1, s1
    for k in range(1, 80):
        a = (2.0 * k - 1.0) * (2.0 * k - 1.0)
        t0 *= (0.0 - a) / (8.0 * k * x)
        t1 *= (4.0 - a) / (8.0 * k * x)
        sg = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2:
            q0 += sg * t0
            q1 += sg * t1
        else:
            p0 += sg * t0
            p1 += sg * t1
        if fabs(t0) < 1e-17 and fabs(t1) < 1e-17:
            break
    c0 = (c + s) * r2
    s0 = (s - c) * r2
    c1 = (s - c) * r2
    s1 = -(s + c) * r2
    j0[0] = amp * (p0 * c0 - q0 * s0)
    y0[0] = amp * (p0 * s0 + q0 * c0)
    j1[0] = amp * (p1 * c1 - q1 * s1)
    y1[0] = amp * (p1 * s1 + q1 * c1)


cdef enum:
    CHEB_DEG = 15
    CHEB_PANELS = 46
cdef double CHEB_LO = 2.0
cdef double CHEB_WIDTH = 0.5
# coefficients[panel][function][degree], filled once at import from _miller
cdef double _TABLE[CHEB_PANELS][4][CHEB_DEG + 1]


cdef void _build_table():
    cdef int n = CHEB_DEG + 1, p, q, i, j
    cdef double theta, a, x, c
    cdef double vals[CHEB_DEG + 1][4]
    for p in range(CHEB_PANELS):
        a = CHEB_LO + p * CHEB_WIDTH
        for i in range(n):
            theta = M_PI * (i + 0.5) / n
            x = a + 0.5 * CHEB_WIDTH * (cos(theta) + 1.0)
            _miller(x, &vals[i][0], &vals[i][1], &vals[i][2], &vals[i][3])
        for q in range(4):
            for j in range(n):
                c = 0.0
                for i in range(n):
                    c += cos(j * M_PI * (i + 0.5) / n) * vals[i][q]
                _TABLE[p][q][j] = (2.0 / n) * c * (0.5 if j == 0 else 1.0)


_build_table()


cdef inline void _chebyshev(double x, double* j0, double* j1, double* y0, double* y1) noexcept nogil:
    cdef int p = <int>((x - CHEB_LO) / CHEB_WIDTH)
    cdef int q, j
    cdef double t, tt, b1, b2, tmp
    cdef double* out[4]
    out[0] = j0; out[1] = j1; out[2] = y0; out[3] = y1
    if p >= CHEB_PANELS:
        p = CHEB_PANELS - 1
    t = 2.0 * (x - (CHEB_LO + p * CHEB_WIDTH)) / CHEB_WIDTH - 1.0
    tt = 2.0 * t
    for q in range(4):
        b1 = 0.0
        b2 = 0.0
        for j in range(CHEB_DEG, 0, -1):
            tmp = tt * b1 - b2 + _TABLE[p][q][j]
            b2 = b1
            b1 = tmp
        out[q][0] = t * b1 - b2 + _TABLE[p][q][0]


cdef inline void _bessel01(double x, double* j0, double* j1, double* y0, double* y1) noexcept nogil:
    if x <= SERIES_MAX:
        _series(x, j0, j1, y0, y1)
    elif x <= ASYMPTOTIC_MIN:
        _chebyshev(x, j0, j1, y0, y1)
    else:
        _asymptotic(x, j0, j1, y0, y1)


def bessel01(x):
    """J0, J1, Y0, Y1 for a positive float64 array (no domain checks)."""
    cdef cnp.ndarray[double, ndim=1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] xs = xv
    with nogil:
        for i in range(n):
            _bessel01(xs[i], &o[0, i], &o[1, i], &o[2, i], &o[3, i])
    shape = np.shape(x)
    return (out[0].reshape(shape), out[1].reshape(shape),
            out[2].reshape(shape), out[3].reshape(shape))


def kernel_block(double k, tx, ty, tnx, tny, sx, sy, snx, sny,
                 double complex c_s, double complex c_d, double complex c_sp):
    """Combination c_s*G + c_d*dG/dnu(y) + c_sp*dG/dnu(x), targets x rows.

    Coincident target/source pairs are returned as 0.
    """
    cdef double[::1] txv = np.ascontiguousarray(tx, dtype=np.float64)
    cdef double[::1] tyv = np.ascontiguousarray(ty, dtype=np.float64)
    cdef double[::1] tnxv = np.ascontiguousarray(tnx, dtype=np.float64)
    cdef double[::1] tnyv = np.ascontiguousarray(tny, dtype=np.float64)
    cdef double[::1] sxv = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] syv = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double[::1] snxv = np.ascontiguousarray(snx, dtype=np.float64)
    cdef double[::1] snyv = np.ascontiguousarray(sny, dtype=np.float64)
    cdef Py_ssize_t m = txv.shape[0], n = sxv.shape[0], i, j
    out = np.empty((m, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double dx, dy, r, kr, j0, j1, y0, y1
    cdef double complex h0, h1, g, dgr
    cdef bint need_grad = (c_d != 0) or (c_sp != 0)
    with nogil:
        for i in range(m):
            for j in range(n):
                dx = txv[i] - sxv[j]
                dy = tyv[i] - syv[j]
                r = sqrt(dx * dx + dy * dy)
                if r == 0.0:
                    o[i, j] = 0.0
                    continue
                kr = k * r
                _bessel01(kr, &j0, &j1, &y0, &y1)
                g = 0.25j * (j0 + 1j * y0)
                o[i, j] = c_s * g
                if need_grad:
                    # (ik/4) H1(kr) / r
                    dgr = 0.25j * k * (j1 + 1j * y1) / r
                    o[i, j] = o[i, j] + dgr * (c_d * (snxv[j] * dx + snyv[j] * dy)
                                               - c_sp * (tnxv[i] * dx + tnyv[i] * dy))
    return out


def kernel_square_t(double k, x, y, nx, ny, double complex c_s, double complex c_d,
                    double complex c_sp, double complex[:, ::1] out):
    """Fill ``out[j, i]`` with the kernel from node ``j`` to target node ``i``.

    ``out.T`` is then the Fortran-ordered square kernel matrix. Each Bessel
    evaluation serves both ``(i, j)`` and ``(j, i)``; the diagonal is 0.
    """
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] nxv = np.ascontiguousarray(nx, dtype=np.float64)
    cdef double[::1] nyv = np.ascontiguousarray(ny, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i, j
    cdef double dx, dy, r, j0, j1, y0, y1, pi_i, pi_j
    cdef double complex g, dgr
    with nogil:
        for i in range(n):
            out[i, i] = 0.0
            for j in range(i + 1, n):
                dx = xv[i] - xv[j]
                dy = yv[i] - yv[j]
                r = sqrt(dx * dx + dy * dy)
                if r == 0.0:
                    out[j, i] = 0.0
                    out[i, j] = 0.0
                    continue
                _bessel01(k * r, &j0, &j1, &y0, &y1)
                g = c_s * 0.25j * (j0 + 1j * y0)
                dgr = 0.25j * k * (j1 + 1j * y1) / r
                # normal components along x_i - x_j
                pi_i = nxv[i] * dx + nyv[i] * dy
                pi_j = nxv[j] * dx + nyv[j] * dy
                # target i, source j: diff = x_i - x_j
                out[j, i] = g + dgr * (c_d * pi_j - c_sp * pi_i)
                # target j, source i: diff = -(x_i - x_j)
                out[i, j] = g + dgr * (-c_d * pi_i + c_sp * pi_j)


cdef inline double _orient(double ax, double ay, double bx, double by,
                           double cx, double cy) noexcept nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef inline bint _on_box(double ax, double ay, double bx, double by,
                         double px, double py) noexcept nogil:
    return (min(ax, bx) <= px <= max(ax, bx)) and (min(ay, by) <= py <= max(ay, by))


cdef inline bint _cross(double ax, double ay, double bx, double by,
                        double cx, double cy, double dx, double dy, double eps) noexcept nogil:
    cdef double o1 = _orient(ax, ay, bx, by, cx, cy)
    cdef double o2 = _orient(ax, ay, bx, by, dx, dy)
    cdef double o3 = _orient(cx, cy, dx, dy, ax, ay)
    cdef double o4 = _orient(cx, cy, dx, dy, bx, by)
    if fabs(o1) <= eps:
        o1 = 0.0
    if fabs(o2) <= eps:
        o2 = 0.0
    if fabs(o3) <= eps:
        o3 = 0.0
    if fabs(o4) <= eps:
        o4 = 0.0
    if o1 * o2 < 0.0 and o3 * o4 < 0.0:
        return True
    if o1 == 0.0 and _on_box(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0.0 and _on_box(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0.0 and _on_box(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0.0 and _on_box(cx, cy, dx, dy, bx, by):
        return True
    return False


def polygon_is_simple(px, py, double eps):
    """Naive O(n^2) test that a closed polygon has no self-intersections."""
    cdef double[::1] x = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(py, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i, j, i1, j1, jmax
    cdef double ax, ay, bx, by, xmin, xmax, ymin, ymax
    cdef bint hit = False
    with nogil:
        for i in range(n):
            i1 = (i + 1) % n
            ax = x[i]; ay = y[i]; bx = x[i1]; by = y[i1]
            # adjacent segment folding back onto this one
            j1 = (i1 + 1) % n
            if fabs(_orient(ax, ay, bx, by, x[j1], y[j1])) <= eps:
                if (bx - ax) * (x[j1] - bx) + (by - ay) * (y[j1] - by) < 0.0:
                    hit = True
                    break
            xmin = min(ax, bx); xmax = max(ax, bx)
            ymin = min(ay, by); ymax = max(ay, by)
            jmax = n - 1 if i == 0 else n
            for j in range(i + 2, jmax):
                j1 = (j + 1) % n
                if max(x[j], x[j1]) < xmin or min(x[j], x[j1]) > xmax:
                    continue
                if max(y[j], y[j1]) < ymin or min(y[j], y[j1]) > ymax:
                    continue
                if _cross(ax, ay, bx, by, x[j], y[j], x[j1], y[j1], eps):
                    hit = True
                    break
            if hit:
                break
    return not hit
