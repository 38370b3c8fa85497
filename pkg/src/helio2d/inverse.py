"""Damped, band-limited Gauss-Newton steps for the shape of a sound-soft obstacle.

At a current boundary the far-field map is linearized in the normal
perturbation ``p``: its derivative sends ``p`` to the far field of the
Dirichlet problem with boundary data ``-p du/dnu``, where ``du/dnu`` is the
total-field normal derivative on the current boundary. In matrix form
``F' = A_inf C^{-1} B O`` with ``A_inf`` the combined-field far-field matrix,
``C`` the combined-field system matrix, ``B = diag(-du/dnu)`` and ``O`` the
basis evaluation matrix. ``p`` is restricted to ``b`` real trigonometric
degrees of freedom and found by least squares.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .curve import (ClosedCurve, CurveError, DiscretizedBoundary, SelfIntersectionError,
                    filter_resample, is_simple, perturb, sample, trig_basis)
from .forward import (FarFieldData, IncidentWave, factorize, farfield_operator)
from .potentials import assemble_layer, coupling

log = logging.getLogger(__name__)


class StepFailure(RuntimeError):
    """No acceptable (simple) curve was found within the backtracking budget."""


@dataclass(frozen=True)
class PerturbationBasis:
    """Real trigonometric basis ``1, cos t, sin t, cos 2t, ...`` of dimension ``b``."""

    b: int

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("bandlimit b must be >= 1")

    @property
    def max_frequency(self) -> int:
        return self.b // 2

    def matrix(self, t) -> np.ndarray:
        """Evaluation matrix ``O`` with shape ``(len(t), b)``."""
        return trig_basis(self.b, t)

    def evaluate(self, coeffs, t) -> np.ndarray:
        return self.matrix(t) @ np.asarray(coeffs, dtype=np.float64)


@dataclass
class NewtonControls:
    """Damping, backtracking and stopping parameters of one frequency stage."""

    rho: float = 0.1
    lam: float = 0.5
    max_backtracks: int = 20
    max_iters: int = 100
    residual_tol: float = 1e-4
    min_step_tol: float = 1e-2
    nb: int = 50

    def __post_init__(self):
        if not (self.rho > 0 and 0 < self.lam < 1 and self.max_backtracks >= 0
                and self.max_iters >= 1 and self.residual_tol > 0
                and self.min_step_tol >= 0 and self.nb >= 1):
            raise ValueError(f"invalid Newton controls: {self}")

    def to_dict(self) -> dict:
        return asdict(self)


def residual_norm(values: np.ndarray, m: int) -> float:
    """Discrete l2 norm over angles (and directions) scaled by ``sqrt(2 pi / M)``."""
    return float(np.linalg.norm(values) * math.sqrt(2.0 * math.pi / m))


@dataclass(eq=False)
class Linearization:
    """Forward solution and factorizations at one boundary for a set of waves.

    Attributes
    ----------
    dudn : ndarray, shape (N, L)
        Total-field normal derivative for each incident wave.
    predicted : ndarray, shape (M, L)
        Far fields ``F_l(Gamma)``.
    """

    boundary: DiscretizedBoundary
    k: float
    eta: float
    angles: np.ndarray
    waves: list
    dudn: np.ndarray
    predicted: np.ndarray
    cfie: object
    a_inf: np.ndarray

    @classmethod
    def build(cls, boundary: DiscretizedBoundary, waves, angles, solver: str = "auto",
              eta: float | None = None) -> "Linearization":
        ks = {w.k for w in waves}
        if len(ks) != 1:
            raise ValueError("all incident waves must share one wavenumber")
        k = ks.pop()
        eta = coupling(k) if eta is None else eta
        green = factorize(assemble_layer("GREEN", k, boundary, eta=eta), solver)
        nodes, normals = boundary.nodes, boundary.normals
        uinc = np.stack([w.values(nodes) for w in waves], axis=1)
        dinc = np.stack([w.normal_derivative(nodes, normals) for w in waves], axis=1)
        dudn = green.solve(dinc - 1j * eta * uinc)
        del green
        angles = np.asarray(angles, dtype=np.float64)
        predicted = farfield_operator("dudn", k, boundary, angles) @ dudn
        cfie = factorize(assemble_layer("CFIE", k, boundary, eta=eta), solver)
        a_inf = farfield_operator("cfie", k, boundary, angles, eta)
        return cls(boundary, k, eta, angles, list(waves), dudn, predicted, cfie, a_inf)

    @property
    def m(self) -> int:
        return self.angles.size

    def residual(self, measured: np.ndarray) -> np.ndarray:
        return measured - self.predicted


def frechet_apply(lin: Linearization, p_values: np.ndarray) -> np.ndarray:
    """``F'_l p`` for every wave, given ``p`` at the boundary nodes; shape ``(M, L)``.

    Solves the combined-field Dirichlet problem with data ``-p du/dnu`` and
    applies the far-field operator.
    """
    p = np.asarray(p_values, dtype=np.float64)
    rhs = -p[:, None] * lin.dudn
    return lin.a_inf @ lin.cfie.solve(rhs)


@dataclass(eq=False)
class LinearizedSystem:
    """Real least-squares system ``design @ p ~ rhs`` (real rows over imaginary rows)."""

    design: np.ndarray
    rhs: np.ndarray
    complex_design: np.ndarray
    complex_rhs: np.ndarray
    residual: float
    condition: float


def derivative_matrix(lin: Linearization, basis: PerturbationBasis, route: str = "auto") -> np.ndarray:
    """Complex ``F'`` for all waves, stacked: shape ``(M*L, b)``.

    ``route="direct"`` solves with ``C`` for every basis function and wave;
    ``route="transpose"`` applies ``C^{-T}`` to the ``M`` columns of
    ``A_inf^T`` once and reuses them for every wave.
    """
    o = basis.matrix(lin.boundary.params)
    n_l = lin.dudn.shape[1]
    if route == "auto":
        route = "transpose" if lin.m < basis.b * n_l else "direct"
    if route == "direct":
        rhs = -(o[:, :, None] * lin.dudn[:, None, :]).reshape(o.shape[0], -1)
        cols = lin.a_inf @ lin.cfie.solve(rhs)            # (M, b*L)
        blocks = cols.reshape(lin.m, basis.b, n_l)
        return np.concatenate([blocks[:, :, l] for l in range(n_l)], axis=0)
    if route == "transpose":
        xt = lin.cfie.solve_transpose(np.ascontiguousarray(lin.a_inf.T))   # (N, M)
        blocks = [xt.T @ (-lin.dudn[:, l, None] * o) for l in range(n_l)]
        return np.concatenate(blocks, axis=0)
    raise ValueError(f"unknown route {route!r}")


def build_system(lin: Linearization, measured, basis: PerturbationBasis,
                 route: str = "auto") -> LinearizedSystem:
    """Stack ``F'_l`` and the residuals ``u_meas - F_l`` over all waves.

    ``measured`` is an ``(M, L)`` array or a list of :class:`FarFieldData`
    ordered like the waves.
    """
    meas = _measured_matrix(measured, lin)
    n_rows = 2 * meas.size
    if n_rows <= basis.b:
        raise ValueError(f"under-determined system: {n_rows} real rows for b={basis.b}")
    fp = derivative_matrix(lin, basis, route)
    res = lin.residual(meas)
    r = res.T.reshape(-1)        # direction-major, matching fp
    design = np.concatenate([fp.real, fp.imag], axis=0)
    rhs = np.concatenate([r.real, r.imag])
    s = np.linalg.svd(design, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    return LinearizedSystem(design, rhs, fp, r, residual_norm(res, lin.m), cond)


def _measured_matrix(measured, lin: Linearization) -> np.ndarray:
    if isinstance(measured, np.ndarray):
        meas = measured.reshape(lin.m, -1)
    else:
        cols = []
        for rec, w in zip(measured, lin.waves):
            if not isinstance(rec, FarFieldData):
                raise TypeError("measured must be an array or FarFieldData records")
            if abs(rec.k - w.k) > 1e-12 or np.hypot(*np.subtract(rec.direction, w.d)) > 1e-12:
                raise ValueError(f"record (k={rec.k}, d={rec.direction}) does not match wave "
                                 f"(k={w.k}, d={w.d})")
            if rec.angles.shape != lin.angles.shape or np.max(np.abs(rec.angles - lin.angles)) > 1e-12:
                raise ValueError("measurement angles do not match")
            cols.append(rec.values)
        if len(cols) != len(lin.waves):
            raise ValueError(f"{len(cols)} records for {len(lin.waves)} waves")
        meas = np.stack(cols, axis=1)
    if meas.shape != lin.predicted.shape:
        raise ValueError(f"measured data shape {meas.shape} != {lin.predicted.shape}")
    return meas


def solve_least_squares(system: LinearizedSystem, ridge: float = 1e-12) -> np.ndarray:
    """Minimize ``||design p - rhs||`` by QR with column pivoting.

    Columns whose pivot falls below ``ridge`` times the largest are dropped
    (their coefficients set to zero).
    """
    q, r, perm = sla.qr(system.design, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    rank = int(np.count_nonzero(d > ridge * d[0])) if d.size and d[0] > 0 else 0
    p = np.zeros(system.design.shape[1])
    if rank:
        y = q[:, :rank].T @ system.rhs
        p[perm[:rank]] = sla.solve_triangular(r[:rank, :rank], y)
    return p


def step_norm(basis: PerturbationBasis, coeffs) -> float:
    """RMS size of ``p(t)`` over one period."""
    t = 2.0 * np.pi * np.arange(4 * basis.b + 4) / (4 * basis.b + 4)
    return float(np.sqrt(np.mean(basis.evaluate(coeffs, t) ** 2)))


@dataclass
class StepReport:
    iter: int
    residual: float
    step_norm: float
    backtracks: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def newton_step(curve: ClosedCurve, system: LinearizedSystem, controls: NewtonControls,
                b: int, n: int, basis: PerturbationBasis | None = None, p=None):
    """Take one damped, backtracked and filtered step from ``curve``.

    ``curve`` must be the curve sampled by the linearization (its own
    ``n_modes`` samples are the Nystrom nodes). ``p`` reuses an already
    solved coefficient vector. Returns
    ``(new_curve, coeffs, backtracks, (source, t))``: ``source`` is the
    band-limited filtered curve and ``t`` its parameters at the new nodes.
    """
    p = solve_least_squares(system) if p is None else p
    for l in range(controls.max_backtracks + 1):
        scale = controls.rho * controls.lam ** l
        try:
            cand = perturb(curve, p, scale)
        except CurveError:
            continue
        if not is_simple(cand, max(4096, 8 * cand.bandwidth())):
            continue
        try:
            new, src, t = filter_resample(cand, b, controls.nb, n, check=True, return_source=True)
        except (SelfIntersectionError, CurveError):
            continue
        return new, p, l, (src, t)
    raise StepFailure(f"no simple curve after {controls.max_backtracks} backtracks")


@dataclass
class NewtonResult:
    """Outcome of one frequency stage.

    ``iterates`` holds every accepted curve and ``sources`` the matching
    ``(band-limited source curve, node parameters)`` pairs.
    """

    curve: ClosedCurve
    history: list
    status: str
    iterations: int
    residual: float
    sources: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    error: str | None = None


def run_newton(curve0: ClosedCurve, waves, measured, controls: NewtonControls,
               basis: PerturbationBasis, n: int, angles, solver: str = "auto",
               on_step=None, filter_b: int | None = None) -> NewtonResult:
    """Iterate damped Gauss-Newton steps at one wavenumber.

    Stops when the residual drops below ``controls.residual_tol``, the step
    norm below ``controls.min_step_tol``, or after ``controls.max_iters``
    steps. ``curve0`` is resampled to ``n`` nodes first if needed;
    ``filter_b`` defaults to the basis dimension.
    """
    fb = basis.b if filter_b is None else filter_b
    curve = curve0 if curve0.n_modes == n else _to_nodes(curve0, n)
    lin = Linearization.build(sample(curve, n), waves, angles, solver)
    meas = _measured_matrix(measured, lin)
    res = residual_norm(lin.residual(meas), lin.m)
    history = [StepReport(0, res, 0.0, 0)]
    sources: list = []
    iterates: list = []
    status = "max_iters"
    if on_step:
        on_step(history[-1])
    for it in range(1, controls.max_iters + 1):
        if res < controls.residual_tol:
            status = "converged"
            break
        system = build_system(lin, meas, basis)
        p = solve_least_squares(system)
        sn = step_norm(basis, p)
        if sn < controls.min_step_tol:
            status = "small_step"
            break
        try:
            curve, _, l, src = newton_step(curve, system, controls, fb, n, basis, p)
        except StepFailure as exc:
            return NewtonResult(curve, history, "failed", len(history) - 1, res, sources,
                                iterates, str(exc))
        sources.append(src)
        iterates.append(curve)
        lin = Linearization.build(sample(curve, n), waves, angles, solver)
        res = residual_norm(lin.residual(meas), lin.m)
        history.append(StepReport(it, res, sn, l))
        if on_step:
            on_step(history[-1])
    else:
        if res < controls.residual_tol:
            status = "converged"
    return NewtonResult(curve, history, status, len(history) - 1, res, sources, iterates)


def _to_nodes(curve: ClosedCurve, n: int) -> ClosedCurve:
    """Same curve represented by ``n`` samples (band-limited interpolation)."""
    pts = curve.evaluate(2.0 * np.pi * np.arange(n) / n)
    return ClosedCurve.from_samples(pts[:, 0], pts[:, 1], curve.length)
