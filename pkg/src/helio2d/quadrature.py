"""Periodic trapezoidal rule with Alpert hybrid Gauss-trapezoidal end corrections.

For a ``2*pi``-periodic integrand ``K(t_i, s) sigma(s)`` that behaves like
``phi(s) + psi(s) log|s - t_i|`` near ``t_i``, the corrected rule drops the
grid points ``|j - i| < a`` and adds ``2m`` auxiliary nodes at
``t_i +- x_k h`` with weights ``w_k h``. Density values at the auxiliary
nodes come from local Lagrange interpolation of the grid samples.

The node/weight tables below are the roots of the defining moment equations
(exactness, after zeta regularization, for ``x**s`` and ``x**s log x``,
``s = 0..m-1``); ``tools/alpert_tables.py`` regenerates them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_TABLES = {
    4: (2,
        [0.023796472841189736968, 0.2935370741501914568, 1.023715124251890253],
        [0.087959426755938866257, 0.49890171529136991035, 0.9131388579526912234]),
    8: (5,
        [0.0065318157085679182902, 0.090867445846577286485, 0.39679665333758776795,
         1.0278566405256457006, 1.9452885929092660134, 2.9801479338896396516,
         3.9988613499511230442],
        [0.024621941989952031578, 0.17013158668541780983, 0.46092563586500772359,
         0.79472911486218942682, 1.0087104143379325893, 1.0360936497262155814,
         1.0047876565332848375]),
    16: (10,
         [0.00083715298320141132716, 0.012393827255426369825, 0.060092907857394677721,
          0.18059912496019279293, 0.4142832599028030884, 0.79647477311124298422,
          1.3489938824670588089, 2.0734716602643950277, 2.9479049390314938048,
          3.9281292522486117453, 4.9572030865631116949, 5.9863601139774942221,
          6.9979577047915192782, 7.9998887575246223974, 8.9999987543061196013],
         [0.0031909190866262344063, 0.02423621380426338019, 0.077401355216530879335,
          0.17048894202863690872, 0.30291234785113086103, 0.46522208349146166533,
          0.6401489637096768365, 0.80512129461810611544, 0.93624119456986465442,
          1.0143597753690751691, 1.0351677210536568064, 1.0203086249846103708,
          1.0047983974415139816, 1.000395017352309274, 1.0000071494225368628]),
}


@dataclass(frozen=True)
class AlpertRule:
    """Alpert correction for a logarithmic singularity at one grid point.

    ``aux_nodes`` are offsets in units of the grid spacing, ``n_skipped`` is
    the number ``a`` of excluded grid points on each side (``|j - i| < a``).
    """

    order: int
    aux_nodes: np.ndarray
    aux_weights: np.ndarray
    n_skipped: int
    interp_degree: int

    @property
    def n_aux(self) -> int:
        return self.aux_nodes.size

    def min_points(self) -> int:
        return 4 * self.order + 1


@lru_cache(maxsize=None)
def alpert_rule(order: int = 16) -> AlpertRule:
    """Rule of the given order (4, 8 or 16)."""
    try:
        a, x, w = _TABLES[order]
    except KeyError:
        raise ValueError(f"no Alpert table for order {order}; choose from {sorted(_TABLES)}") from None
    x = np.array(x)
    w = np.array(w)
    x.setflags(write=False)
    w.setflags(write=False)
    return AlpertRule(order, x, w, a, order - 1)


def trapezoid_weights(n: int) -> np.ndarray:
    """Uniform weights ``2*pi/n`` of the periodic trapezoidal rule."""
    if n < 2:
        raise ValueError("need at least two points")
    return np.full(n, 2.0 * np.pi / n)


def lagrange_stencil(offset: float, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer grid offsets and Lagrange weights interpolating to ``offset``.

    Uses the ``npts`` grid points nearest to ``offset`` (centered).
    """
    base = int(np.floor(offset)) - npts // 2 + 1
    grid = np.arange(base, base + npts)
    d = offset - grid
    weights = np.empty(npts)
    for p in range(npts):
        others = np.delete(grid, p)
        weights[p] = np.prod((offset - others) / (grid[p] - others))
    if np.any(d == 0):
        weights = (d == 0).astype(float)
    return grid, weights


@dataclass(frozen=True)
class AuxStencil:
    """All ``2m`` auxiliary nodes of a rule with their interpolation stencils.

    ``offsets[q]`` is the node position in grid units (signed), ``weights[q]``
    its quadrature weight in grid units, ``cols[q]`` the integer offsets of
    the interpolating grid points and ``lagrange[q]`` their weights.
    """

    offsets: np.ndarray
    weights: np.ndarray
    cols: np.ndarray
    lagrange: np.ndarray


@lru_cache(maxsize=None)
def aux_stencil(order: int = 16) -> AuxStencil:
    rule = alpert_rule(order)
    npts = rule.interp_degree + 1
    offsets, weights, cols, lag = [], [], [], []
    for sign in (1.0, -1.0):
        for x, w in zip(rule.aux_nodes, rule.aux_weights):
            g, lw = lagrange_stencil(sign * x, npts)
            offsets.append(sign * x)
            weights.append(w)
            cols.append(g)
            lag.append(lw)
    return AuxStencil(np.array(offsets), np.array(weights), np.array(cols), np.array(lag))


def _check_size(rule: AlpertRule, n: int) -> None:
    if n < rule.min_points():
        raise ValueError(f"order-{rule.order} Alpert rule needs N > {4 * rule.order}, got {n}")


def alpert_correction_row(rule: AlpertRule, n: int, i: int, kernel) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature row for ``int_0^{2 pi} K(t_i, s) sigma(s) ds``.

    ``kernel(s)`` evaluates ``K(t_i, s)`` at an array of parameters ``s``; it is
    never called at ``s = t_i``. Returns ``(indices, weights)`` such that the
    integral is approximately ``weights @ sigma[indices]``.
    """
    _check_size(rule, n)
    h = 2.0 * np.pi / n
    t_i = i * h
    a = rule.n_skipped
    far = (i + np.arange(a, n - a + 1)) % n
    kfar = np.asarray(kernel(far * h))
    st = aux_stencil(rule.order)
    kaux = np.asarray(kernel(t_i + st.offsets * h))
    row = np.zeros(n, dtype=np.result_type(kfar, kaux, float))
    row[far] = h * kfar
    for q in range(st.offsets.size):
        np.add.at(row, (i + st.cols[q]) % n, h * st.weights[q] * kaux[q] * st.lagrange[q])
    idx = np.nonzero(row)[0]
    return idx, row[idx]


def correction_matrix(rule: AlpertRule, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Column offsets and multipliers of the auxiliary-node contributions.

    Returns ``cols`` with shape ``(2m, npts)`` (integer offsets from the
    target index) and ``coef`` with shape ``(2m, npts)`` holding
    ``h * w_q * lagrange``; the kernel value at auxiliary node ``q`` of
    target ``i`` multiplies ``coef[q]`` and lands in columns ``(i + cols[q]) % n``.
    """
    _check_size(rule, n)
    h = 2.0 * np.pi / n
    st = aux_stencil(rule.order)
    return st.cols, h * st.weights[:, None] * st.lagrange
