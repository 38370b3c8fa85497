"""Band-limited closed curves.

A :class:`ClosedCurve` stores the Fourier coefficients of ``gamma(t)`` for
``t`` in ``[0, 2*pi)``, ordered ``m = -Nc/2 .. Nc/2 - 1``. Curves are always
counterclockwise, so the outward normal is ``(y', -x') / |gamma'|``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ._backend import impl

TWO_PI = 2.0 * np.pi
BANDWIDTH_TOL = 1e-13


class CurveError(ValueError):
    """Invalid curve or curve operation."""


class BandwidthError(CurveError):
    """Too few samples to represent the curve."""


class SelfIntersectionError(CurveError):
    """The curve (after an operation) is not simple."""


def modes(n: int) -> np.ndarray:
    """Mode numbers ``-n//2 .. n - n//2 - 1`` in centered order."""
    return np.arange(-(n // 2), n - n // 2)


def fourier_coefficients(samples: np.ndarray) -> np.ndarray:
    """Centered Fourier coefficients of equispaced samples on ``[0, 2*pi)``."""
    samples = np.asarray(samples)
    return np.fft.fftshift(np.fft.fft(samples)) / samples.shape[0]


def _symmetric(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Modes and coefficients with the even-length Nyquist term split evenly.

    Splitting ``c_{-n/2}`` into halves at ``+-n/2`` keeps shifted and
    differentiated evaluations real.
    """
    n = coeffs.shape[0]
    m = modes(n)
    if n % 2:
        return m, coeffs
    half = 0.5 * coeffs[0]
    return np.concatenate([m, [n // 2]]), np.concatenate([[half], coeffs[1:], [half]])


def _eval_grid(coeffs: np.ndarray, n: int, shift: float = 0.0, deriv: int = 0) -> np.ndarray:
    """Evaluate the series at ``t_j + shift``, ``t_j = 2*pi*j/n`` (real part)."""
    m, c = _symmetric(coeffs)
    c = c * np.exp(1j * m * shift) * (1j * m) ** deriv
    folded = np.zeros(n, dtype=complex)
    np.add.at(folded, m % n, c)
    return np.fft.ifft(folded).real * n


def _eval_points(coeffs: np.ndarray, t: np.ndarray, deriv: int = 0) -> np.ndarray:
    """Direct evaluation at arbitrary parameters, skipping zero modes."""
    m, c = _symmetric(coeffs)
    keep = c != 0
    m, c = m[keep], c[keep] * (1j * m[keep]) ** deriv
    t = np.asarray(t, dtype=np.float64)
    out = np.empty(t.shape)
    flat = t.ravel()
    chunk = max(1, 4_000_000 // max(m.size, 1))
    res = out.reshape(-1)
    for s in range(0, flat.size, chunk):
        res[s:s + chunk] = (np.exp(1j * np.outer(flat[s:s + chunk], m)) @ c).real
    return out


def _bandwidth(coeffs: np.ndarray, tol: float = BANDWIDTH_TOL) -> int:
    mags = np.abs(coeffs)
    scale = mags.max()
    if scale == 0:
        return 0
    significant = np.abs(modes(coeffs.shape[0]))[mags > tol * scale]
    return int(significant.max())


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Closed curve as centered Fourier coefficients of ``x(t)`` and ``y(t)``."""

    coeffs_x: np.ndarray
    coeffs_y: np.ndarray
    length: float = field(default=np.nan)

    def __post_init__(self):
        cx = np.asarray(self.coeffs_x, dtype=complex)
        cy = np.asarray(self.coeffs_y, dtype=complex)
        if cx.shape != cy.shape or cx.ndim != 1 or cx.size < 3:
            raise CurveError("coeffs_x and coeffs_y must be 1-D arrays of equal length >= 3")
        cx.setflags(write=False)
        cy.setflags(write=False)
        object.__setattr__(self, "coeffs_x", cx)
        object.__setattr__(self, "coeffs_y", cy)
        if not np.isfinite(self.length):
            object.__setattr__(self, "length", self._perimeter())

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_samples(cls, x, y, length: float | None = None) -> "ClosedCurve":
        """Curve interpolating equispaced samples, reoriented counterclockwise."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1:
            raise CurveError("x and y must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise CurveError("non-finite curve samples")
        n = x.size
        # signed area by the trapezoid rule on x y' - y x'
        cx, cy = fourier_coefficients(x), fourier_coefficients(y)
        area = _signed_area(cx, cy)
        if area < 0:
            rev = (-np.arange(n)) % n
            x, y = x[rev], y[rev]
            cx, cy = fourier_coefficients(x), fourier_coefficients(y)
        return cls(cx, cy, np.nan if length is None else float(length))

    @classmethod
    def from_function(cls, fn, n: int) -> "ClosedCurve":
        """Sample ``fn(t) -> (x, y)`` at ``n`` equispaced parameters."""
        t = TWO_PI * np.arange(n) / n
        x, y = fn(t)
        return cls.from_samples(np.broadcast_to(x, t.shape), np.broadcast_to(y, t.shape))

    @classmethod
    def circle(cls, radius: float = 1.0, center=(0.0, 0.0), n: int = 64) -> "ClosedCurve":
        return cls.from_function(
            lambda t: (center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)), n)

    @classmethod
    def star(cls, arms: int = 7, base: float = 2.0, amplitude: float = 0.2,
             n: int = 64) -> "ClosedCurve":
        """Star ``(base + amplitude*cos(arms*t)) * (cos t, sin t)``."""
        def fn(t):
            r = base + amplitude * np.cos(arms * t)
            return r * np.cos(t), r * np.sin(t)
        return cls.from_function(fn, n)

    # -- queries ----------------------------------------------------------
    @property
    def n_modes(self) -> int:
        return self.coeffs_x.size

    def bandwidth(self, tol: float = BANDWIDTH_TOL) -> int:
        """Largest ``|m|`` whose coefficient exceeds ``tol`` relative to the largest."""
        return max(_bandwidth(self.coeffs_x, tol), _bandwidth(self.coeffs_y, tol))

    def samples(self, n: int | None = None, shift: float = 0.0, deriv: int = 0) -> np.ndarray:
        """``(n, 2)`` array of ``gamma^(deriv)(2*pi*j/n + shift)``."""
        n = self.n_modes if n is None else n
        return np.stack([_eval_grid(self.coeffs_x, n, shift, deriv),
                         _eval_grid(self.coeffs_y, n, shift, deriv)], axis=1)

    def evaluate(self, t, deriv: int = 0) -> np.ndarray:
        """``gamma^(deriv)(t)`` at arbitrary parameters; trailing axis of length 2."""
        return np.stack([_eval_points(self.coeffs_x, t, deriv),
                         _eval_points(self.coeffs_y, t, deriv)], axis=-1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.samples()

    def signed_area(self) -> float:
        return _signed_area(self.coeffs_x, self.coeffs_y)

    def _perimeter(self) -> float:
        n = max(4 * self.n_modes, 256)
        d = self.samples(n, deriv=1)
        return float(np.hypot(d[:, 0], d[:, 1]).sum() * TWO_PI / n)

    def to_dict(self) -> dict:
        return {
            "n_modes": int(self.n_modes),
            "coeffs_x": [[float(c.real), float(c.imag)] for c in self.coeffs_x],
            "coeffs_y": [[float(c.real), float(c.imag)] for c in self.coeffs_y],
            "length": float(self.length),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClosedCurve":
        try:
            n = int(data["n_modes"])
            cx = np.array([complex(re, im) for re, im in data["coeffs_x"]])
            cy = np.array([complex(re, im) for re, im in data["coeffs_y"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise CurveError(f"malformed curve record: {exc}") from exc
        if cx.size != n or cy.size != n:
            raise CurveError("n_modes does not match coefficient count")
        # go through samples so orientation is normalized and round-off symmetrized
        x = np.fft.ifft(np.fft.ifftshift(cx)).real * n
        y = np.fft.ifft(np.fft.ifftshift(cy)).real * n
        area = _signed_area(cx, cy)
        if area >= 0:
            return cls(cx, cy, float(data.get("length", np.nan)))
        return cls.from_samples(x, y, data.get("length"))


def _signed_area(cx: np.ndarray, cy: np.ndarray) -> float:
    # 1/2 * integral of x y' - y x' = pi * sum_m i m conj(x_m) y_m ... done on samples
    n = max(2 * cx.size, 64)
    x, y = _eval_grid(cx, n), _eval_grid(cy, n)
    dx, dy = _eval_grid(cx, n, deriv=1), _eval_grid(cy, n, deriv=1)
    return float(0.5 * np.sum(x * dy - y * dx) * TWO_PI / n)


def save_curve(curve: ClosedCurve, path) -> None:
    Path(path).write_text(json.dumps(curve.to_dict()))


def load_curve(path) -> ClosedCurve:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CurveError(f"cannot read curve file {path}: {exc}") from exc
    return ClosedCurve.from_dict(data)


@dataclass(frozen=True, eq=False)
class DiscretizedBoundary:
    """Nystrom node set: ``t_j = 2*pi*j/N`` with positions, normals and speeds."""

    curve: ClosedCurve
    n_nodes: int
    nodes: np.ndarray
    derivs: np.ndarray
    normals: np.ndarray
    speeds: np.ndarray

    @property
    def h(self) -> float:
        return TWO_PI / self.n_nodes

    @property
    def weights(self) -> np.ndarray:
        """Arclength weights ``|gamma'(t_j)| * 2*pi/N``."""
        return self.speeds * self.h

    @property
    def params(self) -> np.ndarray:
        return self.h * np.arange(self.n_nodes)

    def perimeter(self) -> float:
        return float(self.weights.sum())

    def signed_area(self) -> float:
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        return float(0.5 * np.sum(x * self.derivs[:, 1] - y * self.derivs[:, 0]) * self.h)

    def shifted(self, shift: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, normals and speeds at ``t_j + shift`` for all ``j``."""
        pos = self.curve.samples(self.n_nodes, shift)
        d = self.curve.samples(self.n_nodes, shift, deriv=1)
        speed = np.hypot(d[:, 0], d[:, 1])
        normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / speed[:, None]
        return pos, normals, speed

    def shifted_difference(self, shift: float) -> np.ndarray:
        """``gamma(t_j + shift) - gamma(t_j)`` for all ``j``, free of cancellation.

        Uses ``exp(i m s) - 1 = 2i sin(m s / 2) exp(i m s / 2)`` per mode, so
        the result keeps full relative accuracy for tiny shifts.
        """
        out = []
        for coeffs in (self.curve.coeffs_x, self.curve.coeffs_y):
            m, c = _symmetric(coeffs)
            c = c * (2j * np.sin(0.5 * m * shift) * np.exp(0.5j * m * shift))
            folded = np.zeros(self.n_nodes, dtype=complex)
            np.add.at(folded, m % self.n_nodes, c)
            out.append(np.fft.ifft(folded).real * self.n_nodes)
        return np.stack(out, axis=1)


def sample(curve: ClosedCurve, n: int) -> DiscretizedBoundary:
    """Discretize ``curve`` at ``n`` equispaced parameters using exact spectral derivatives."""
    bw = curve.bandwidth()
    if n < curve.n_modes and n < 2 * bw + 2:
        raise BandwidthError(f"{n} nodes cannot resolve a curve of bandwidth {bw} (need >= {2 * bw + 2})")
    pos = curve.samples(n)
    d = curve.samples(n, deriv=1)
    speed = np.hypot(d[:, 0], d[:, 1])
    if np.any(speed <= 0):
        raise CurveError("parametrization is not regular (|gamma'| = 0)")
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / speed[:, None]
    return DiscretizedBoundary(curve, n, pos, d, normals, speed)


def raised_cosine_window(m, b: int, nb: int) -> np.ndarray:
    """1 for ``|m| <= b``, 0 for ``|m| >= b + nb``, raised-cosine in between."""
    a = np.abs(np.asarray(m, dtype=np.float64))
    w = 0.5 * (1.0 + np.cos(np.pi * (a - b) / nb))
    return np.where(a <= b, 1.0, np.where(a >= b + nb, 0.0, w))


def lowpass(curve: ClosedCurve, b: int, nb: int) -> ClosedCurve:
    """Apply the raised-cosine window to the coefficients, keeping the parametrization."""
    if b < 1 or nb < 1:
        raise CurveError("filter needs b >= 1 and nb >= 1")
    w = raised_cosine_window(modes(curve.n_modes), b, nb)
    return ClosedCurve(curve.coeffs_x * w, curve.coeffs_y * w)


def filter_resample(curve: ClosedCurve, b: int, nb: int, n: int, check: bool = True,
                    return_source: bool = False):
    """Low-pass filter ``curve`` and resample it at ``n`` points equispaced in arclength.

    The window zeroes every mode ``|m| >= b + nb`` of the input
    parametrization; the resampled curve passes through points of that
    band-limited curve spaced evenly in its arclength. Reparametrizing by
    arclength generally widens the spectrum again, so the output
    coefficients themselves are not band-limited.

    Raises :class:`SelfIntersectionError` when ``check`` is set and the
    filtered curve is not simple.

    Returns
    -------
    ClosedCurve, or ``(curve, source, t)`` if ``return_source``: ``source`` is
    the band-limited filtered curve and ``t`` its parameters at the new nodes.
    """
    src = lowpass(curve, b, nb)
    cx, cy = src.coeffs_x, src.coeffs_y
    w = raised_cosine_window(modes(curve.n_modes), b, nb)
    top = int(np.abs(modes(curve.n_modes))[w > 0].max())

    # speed on a fine grid, refined until its spectrum has decayed
    nf = max(256, 8 * top, 2 * n)
    nf += nf % 2
    while True:
        dx, dy = _eval_grid(cx, nf, deriv=1), _eval_grid(cy, nf, deriv=1)
        speed = np.hypot(dx, dy)
        sig = fourier_coefficients(speed)
        tail = np.abs(sig[: nf // 16]).max()
        if tail <= 1e-16 * abs(sig[nf // 2]) or nf >= 1 << 16:
            break
        nf *= 2
    if np.any(speed <= 0):
        raise CurveError("filtered curve is not regular")
    total = float(sig[nf // 2].real) * TWO_PI

    # cumulative arclength s(t) = sig_0 t + sum_{m != 0} sig_m (e^{imt} - 1)/(im)
    m = modes(nf)
    keep = (m > 0) & (np.abs(sig) > 1e-18 * abs(sig[nf // 2]))
    mp_, sp_ = m[keep], sig[keep]
    sig0 = float(sig[nf // 2].real)

    def arclength(t):
        e = np.exp(1j * np.outer(t, mp_))
        return sig0 * t + 2.0 * ((e - 1.0) @ (sp_ / (1j * mp_))).real

    def speed_at(t):
        d = np.stack([_eval_points(cx, t, 1), _eval_points(cy, t, 1)])
        return np.hypot(d[0], d[1])

    tg = TWO_PI * np.arange(nf + 1) / nf
    sg = arclength(tg)
    sg[-1] = total
    target = total * np.arange(n) / n
    idx = np.clip(np.searchsorted(sg, target, side="right") - 1, 0, nf - 1)
    lo, hi = tg[idx], tg[idx + 1]
    t = np.interp(target, sg, tg)
    for _ in range(60):
        f = arclength(t) - target
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        step = f / speed_at(t)
        t_new = t - step
        outside = (t_new <= lo) | (t_new >= hi)
        t_new = np.where(outside, 0.5 * (lo + hi), t_new)
        done = np.max(np.abs(t_new - t)) < 1e-13
        t = t_new
        if done:
            break

    x = _eval_points(cx, t)
    y = _eval_points(cy, t)
    out = ClosedCurve.from_samples(x, y, total)
    if check and not is_simple(out, max(4096, 8 * out.bandwidth())):
        raise SelfIntersectionError("filtered curve is self-intersecting")
    if return_source:
        return out, src, t
    return out


def is_simple(curve: ClosedCurve, ns: int = 4096) -> bool:
    """True iff the ``ns``-gon inscribed in ``curve`` has no self-intersections."""
    pts = curve.samples(ns)
    span = np.ptp(pts, axis=0).max()
    eps = 1e-14 * span * span
    return bool(impl.polygon_is_simple(pts[:, 0], pts[:, 1], eps))


def trig_basis(b: int, t) -> np.ndarray:
    """Real trigonometric basis of dimension ``b`` evaluated at ``t``.

    Columns are ``1, cos t, sin t, cos 2t, sin 2t, ...``; for even ``b`` the
    last column is the unpaired ``cos(b/2 t)``.
    """
    if b < 1:
        raise CurveError("basis dimension must be >= 1")
    t = np.asarray(t, dtype=np.float64)
    cols = [np.ones_like(t)]
    m = 1
    while len(cols) < b:
        cols.append(np.cos(m * t))
        if len(cols) < b:
            cols.append(np.sin(m * t))
        m += 1
    return np.stack(cols, axis=-1)


def perturb(curve: ClosedCurve, p_coeffs=None, scale: float = 1.0, *, values=None) -> ClosedCurve:
    """Move the sample points of ``curve`` along the normal by ``scale * p``.

    ``p`` is given either by real trigonometric coefficients (see
    :func:`trig_basis`) or directly by its ``values`` at the curve's own
    ``n_modes`` sample parameters. Raises :class:`CurveError` if any chord
    between neighbouring samples reverses direction (the curve folds over).
    """
    n = curve.n_modes
    disc = _raw_sample(curve)
    if values is None:
        p = trig_basis(len(p_coeffs), disc.params) @ np.asarray(p_coeffs, dtype=np.float64)
    else:
        p = np.asarray(values, dtype=np.float64)
    new = disc.nodes + (scale * p)[:, None] * disc.normals
    # a step past a focal point reverses chords (the curve folds over)
    seg_old = np.roll(disc.nodes, -1, axis=0) - disc.nodes
    seg_new = np.roll(new, -1, axis=0) - new
    if np.any(np.einsum("ij,ij->i", seg_old, seg_new) <= 0):
        raise CurveError("perturbation folds the curve over itself")
    return ClosedCurve.from_samples(new[:, 0], new[:, 1])


def _raw_sample(curve: ClosedCurve) -> DiscretizedBoundary:
    n = curve.n_modes
    pos = curve.samples(n)
    d = curve.samples(n, deriv=1)
    speed = np.hypot(d[:, 0], d[:, 1])
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / speed[:, None]
    return DiscretizedBoundary(curve, n, pos, d, normals, speed)


def hausdorff(a: ClosedCurve, b: ClosedCurve, ns: int = 2048) -> float:
    """Symmetric Hausdorff distance between two curves.

    Each of ``ns`` sample points on one curve is matched to the nearest
    sample of the other, then the match is refined on the continuous curve
    by Newton's method on the squared distance.
    """
    return float(max(_directed(a.samples(ns), b, ns), _directed(b.samples(ns), a, ns)))


def _directed(pts: np.ndarray, curve: ClosedCurve, ns: int) -> float:
    grid = curve.samples(ns)
    d0, idx = cKDTree(grid).query(pts)
    t = TWO_PI * idx / ns
    for _ in range(20):
        g = curve.evaluate(t) - pts
        d1 = curve.evaluate(t, 1)
        d2 = curve.evaluate(t, 2)
        f1 = np.einsum("ij,ij->i", g, d1)
        f2 = np.einsum("ij,ij->i", d1, d1) + np.einsum("ij,ij->i", g, d2)
        step = np.where(f2 > 0, f1 / np.where(f2 > 0, f2, 1.0), 0.0)
        step = np.clip(step, -TWO_PI / ns, TWO_PI / ns)
        t = t - step
        if np.max(np.abs(step)) < 1e-14:
            break
    d = np.hypot(*(curve.evaluate(t) - pts).T)
    return np.minimum(d, d0).max()
