"""Nystrom discretizations of the single, double and adjoint double layer operators.

An operator is never materialized unless asked: :class:`LayerOperator`
evaluates arbitrary sub-blocks ``A[rows, cols]`` on demand, which is all the
hierarchical solver needs. ``dense()`` builds the whole matrix.

Matrix entries are ``coef_diag * delta_ij + h * K(t_i, t_j) * |gamma'(t_j)|``
away from the diagonal band, with the near-diagonal band replaced by the
Alpert correction stencil.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import impl
from .curve import DiscretizedBoundary
from .quadrature import AlpertRule, alpert_rule, correction_matrix
from .specfun import hankel01, kernel_block

KINDS = ("S", "D", "Sprime", "CFIE", "GREEN")


def coupling(k: float) -> float:
    """Default coupling parameter ``eta = max(k, 1)``."""
    return max(float(k), 1.0)


def _coefficients(kind: str, eta: float) -> tuple[float, complex, complex, complex]:
    """``(diag, c_s, c_d, c_sp)`` of the operator ``diag*I + c_s S + c_d D + c_sp S'``."""
    if kind == "S":
        return 0.0, 1.0, 0.0, 0.0
    if kind == "D":
        return 0.0, 0.0, 1.0, 0.0
    if kind == "Sprime":
        return 0.0, 0.0, 0.0, 1.0
    if kind == "CFIE":
        return 0.5, -1j * eta, 1.0, 0.0
    if kind == "GREEN":
        return 0.5, -1j * eta, 0.0, 1.0
    raise ValueError(f"unknown operator kind {kind!r}; expected one of {KINDS}")


def pointwise_kernel(k, x, y, nx, ny, c_s, c_d, c_sp, diff=None) -> np.ndarray:
    """``c_s G + c_d dG/dnu_y + c_sp dG/dnu_x`` for matching arrays of point pairs.

    ``diff`` may supply ``x - y`` computed more accurately than by subtraction.
    """
    diff = x - y if diff is None else diff
    r = np.hypot(diff[..., 0], diff[..., 1])
    h0, h1 = hankel01(k * r)
    out = (0.25j * c_s) * h0
    if c_d or c_sp:
        g = (0.25j * k) * h1 / r
        if c_d:
            out = out + c_d * g * np.einsum("...i,...i->...", ny, diff)
        if c_sp:
            out = out - c_sp * g * np.einsum("...i,...i->...", nx, diff)
    return out


@dataclass(eq=False)
class LayerOperator:
    """Lazy Nystrom matrix of a boundary integral operator.

    Attributes
    ----------
    kind : {"S", "D", "Sprime", "CFIE", "GREEN"}
        ``CFIE`` is ``1/2 I + D - i eta S``; ``GREEN`` is
        ``1/2 I + S' - i eta S``.
    band : ndarray, shape (N, 2B+1)
        Alpert corrections; ``band[i, B + d]`` adds to entry ``(i, i + d mod N)``.
    """

    kind: str
    k: float
    boundary: DiscretizedBoundary
    rule: AlpertRule
    eta: float
    diag: float = field(init=False)
    c_s: complex = field(init=False)
    c_d: complex = field(init=False)
    c_sp: complex = field(init=False)
    band: np.ndarray = field(init=False, repr=False)
    half_band: int = field(init=False)

    def __post_init__(self):
        self.diag, self.c_s, self.c_d, self.c_sp = _coefficients(self.kind, self.eta)
        self._build_band()

    @property
    def n(self) -> int:
        return self.boundary.n_nodes

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def _build_band(self) -> None:
        bnd, n = self.boundary, self.boundary.n_nodes
        cols, coef = correction_matrix(self.rule, n)
        offsets = np.concatenate([self.rule.aux_nodes, -self.rule.aux_nodes])
        h = bnd.h
        # kernel from each target i to its auxiliary sources at t_i + x_q h
        kaux = np.empty((offsets.size, n), dtype=complex)
        for q, off in enumerate(offsets):
            pos, nrm, spd = bnd.shifted(off * h)
            # aux nodes sit as close as 1e-3 h to the target: avoid x - y cancellation
            diff = -bnd.shifted_difference(off * h)
            kaux[q] = spd * pointwise_kernel(self.k, bnd.nodes, pos, bnd.normals, nrm,
                                             self.c_s, self.c_d, self.c_sp, diff)
        B = int(np.abs(cols).max())
        B = max(B, self.rule.n_skipped - 1)
        if 2 * B + 1 > n:
            raise ValueError(f"N={n} too small for the order-{self.rule.order} correction band")
        band = np.zeros((n, 2 * B + 1), dtype=complex)
        for q in range(offsets.size):
            for p in range(cols.shape[1]):
                band[:, B + cols[q, p]] += coef[q, p] * kaux[q]
        self.band = band
        self.half_band = B

    def entries(self, rows, cols) -> np.ndarray:
        """Sub-block ``A[rows][:, cols]`` as a complex array."""
        rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
        cols = np.atleast_1d(np.asarray(cols, dtype=np.intp))
        bnd, n = self.boundary, self.n
        a = self.rule.n_skipped
        block = kernel_block(self.k, bnd.nodes[rows], bnd.nodes[cols],
                             bnd.normals[rows], bnd.normals[cols],
                             self.c_s, self.c_d, self.c_sp)
        block *= bnd.weights[cols]
        d = (cols[None, :] - rows[:, None]) % n
        d = np.where(d > n // 2, d - n, d)
        near = np.abs(d) <= self.half_band
        if near.any():
            ri, ci = np.nonzero(near)
            dd = d[ri, ci]
            vals = self.band[rows[ri], self.half_band + dd]
            vals = np.where(np.abs(dd) < a, vals, vals + block[ri, ci])
            block[ri, ci] = vals
            if self.diag:
                block[ri, ci] += np.where(dd == 0, self.diag, 0.0)
        return block

    def dense(self, order: str = "F") -> np.ndarray:
        """Full ``N x N`` matrix (Fortran order by default, ready for LAPACK)."""
        n, bnd = self.n, self.boundary
        mt = np.empty((n, n), dtype=complex)
        # mt[j, i] = A[i, j]; the kernel is evaluated once per unordered pair
        impl.kernel_square_t(self.k, bnd.nodes[:, 0], bnd.nodes[:, 1], bnd.normals[:, 0],
                             bnd.normals[:, 1], complex(self.c_s), complex(self.c_d),
                             complex(self.c_sp), mt)
        a = mt.T
        a *= bnd.weights[None, :]
        rows = np.arange(n)
        B, skip = self.half_band, self.rule.n_skipped
        for d in range(-B, B + 1):
            cols = (rows + d) % n
            if abs(d) < skip:
                a[rows, cols] = self.band[:, B + d]
            else:
                a[rows, cols] += self.band[:, B + d]
        a[rows, rows] += self.diag
        return a if order == "F" else np.ascontiguousarray(a)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``A @ x`` without storing ``A`` (row chunks)."""
        n = self.n
        x = np.asarray(x)
        out = np.empty((n,) + x.shape[1:], dtype=complex)
        chunk = max(1, 2_000_000 // n)
        cols = np.arange(n)
        for s in range(0, n, chunk):
            rows = np.arange(s, min(n, s + chunk))
            out[rows] = self.entries(rows, cols) @ x
        return out


def assemble_layer(kind: str, k: float, boundary: DiscretizedBoundary,
                   rule: AlpertRule | None = None, eta: float | None = None) -> LayerOperator:
    """Nystrom operator of the given kind; see :class:`LayerOperator`."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    rule = alpert_rule(16) if rule is None else rule
    eta = coupling(k) if eta is None else float(eta)
    return LayerOperator(kind, float(k), boundary, rule, eta)


FARFIELD_KINDS = ("Sinf", "Dinf")


def measurement_angles(m: int) -> np.ndarray:
    """Measurement grid ``theta_l = (2l - 1) pi / M``, ``l = 1..M``."""
    if m < 1:
        raise ValueError("need at least one measurement angle")
    return (2.0 * np.arange(1, m + 1) - 1.0) * np.pi / m


def assemble_farfield(kind: str, k: float, boundary: DiscretizedBoundary, angles) -> np.ndarray:
    """Far-field matrix ``(M, N)`` of the single (``Sinf``) or double (``Dinf``) layer."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    th = np.atleast_1d(np.asarray(angles, dtype=np.float64))
    xhat = np.stack([np.cos(th), np.sin(th)], axis=1)
    phase = np.exp(-1j * k * (xhat @ boundary.nodes.T))
    if kind == "Sinf":
        pref = np.exp(0.25j * np.pi) / np.sqrt(8.0 * np.pi * k)
        return pref * phase * boundary.weights
    if kind == "Dinf":
        pref = np.exp(-0.25j * np.pi) * np.sqrt(k / (8.0 * np.pi))
        return pref * phase * (xhat @ boundary.normals.T) * boundary.weights
    raise ValueError(f"unknown far-field kind {kind!r}; expected one of {FARFIELD_KINDS}")
