"""Forward sound-soft scattering: combined-field and Green's-representation solves.

The combined-field path represents the scattered field as ``(D - i eta S) phi``
and solves ``(1/2 I + D - i eta S) phi = -u_inc``. The Green path solves for
the total-field normal derivative ``psi = du/dnu`` from

    (1/2 I + S' - i eta S) psi = du_inc/dnu - i eta u_inc,

which follows from ``S psi = u_inc`` inside the obstacle and its interior
normal derivative; the far field is ``-S_inf psi``.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import hodlr
from .curve import DiscretizedBoundary, sample
from .potentials import (LayerOperator, assemble_farfield, assemble_layer, coupling,
                         measurement_angles)
from .specfun import green, kernel_block

DENSE_THRESHOLD = 4096


class SolverError(RuntimeError):
    """Numerical failure in a forward solve."""


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave ``exp(i k x . d)``."""

    k: float
    d: tuple

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64).reshape(2)
        if not self.k > 0:
            raise ValueError("wavenumber must be positive")
        if abs(np.hypot(*d) - 1.0) > 1e-14:
            raise ValueError(f"direction {tuple(d)} is not a unit vector")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "d", (float(d[0]), float(d[1])))

    @classmethod
    def from_angle(cls, k: float, angle: float) -> "IncidentWave":
        return cls(k, (math.cos(angle), math.sin(angle)))

    def values(self, points) -> np.ndarray:
        return np.exp(1j * self.k * (np.asarray(points) @ np.asarray(self.d)))

    def normal_derivative(self, points, normals) -> np.ndarray:
        d = np.asarray(self.d)
        return 1j * self.k * (np.asarray(normals) @ d) * self.values(points)


@dataclass(frozen=True, eq=False)
class DensitySolution:
    """Boundary unknown: ``phi`` (kind ``"cfie"``) or ``du/dnu`` (kind ``"dudn"``)."""

    kind: str
    values: np.ndarray
    k: float
    boundary: DiscretizedBoundary
    eta: float


@dataclass(eq=False)
class FarFieldData:
    """Far-field samples ``u_inf(theta_l)`` for one wavenumber and direction."""

    k: float
    direction: tuple
    angles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=complex)
        if self.angles.ndim != 1 or self.angles.shape != self.values.shape or self.angles.size < 1:
            raise ValueError("angles and values must be matching non-empty 1-D arrays")
        self.direction = (float(self.direction[0]), float(self.direction[1]))

    def to_dict(self) -> dict:
        return {
            "k": float(self.k),
            "direction": list(self.direction),
            "angles": [float(a) for a in self.angles],
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FarFieldData":
        try:
            vals = np.array([complex(re, im) for re, im in data["values"]])
            return cls(float(data["k"]), tuple(data["direction"]), data["angles"], vals)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed far-field record: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "FarFieldData":
        return cls.from_dict(json.loads(Path(path).read_text()))


# -- factorizations ------------------------------------------------------------
@dataclass(eq=False)
class DenseSolver:
    """LU factorization of an explicit matrix."""

    lu: tuple
    n: int
    method: str = field(default="dense", init=False)

    @classmethod
    def from_operator(cls, op: LayerOperator) -> "DenseSolver":
        a = op.dense(order="F")
        lu, piv = sla.lu_factor(a, overwrite_a=True, check_finite=False)
        if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0):
            raise SolverError("singular or non-finite system matrix")
        return cls((lu, piv), op.n)

    def solve(self, b):
        return sla.lu_solve(self.lu, b, check_finite=False)

    def solve_transpose(self, b):
        return sla.lu_solve(self.lu, b, trans=1, check_finite=False)


@dataclass(eq=False)
class HodlrSolver:
    """HODLR-compressed and factorized system matrix."""

    matrix: hodlr.HodlrMatrix
    n: int
    method: str = field(default="hodlr", init=False)

    @classmethod
    def from_operator(cls, op: LayerOperator, eps: float = 1e-10,
                      leaf_size: int = 128) -> "HodlrSolver":
        h = hodlr.compress(op.entries, op.n, leaf_size=leaf_size, eps=eps).factorize()
        return cls(h, op.n)

    def solve(self, b):
        return self.matrix.solve(b)

    def solve_transpose(self, b):
        return self.matrix.solve_transpose(b)


def factorize(op: LayerOperator, solver: str = "auto", eps: float = 1e-10,
              leaf_size: int = 128):
    """Factorize ``op`` with ``"dense"``, ``"hodlr"`` or ``"auto"`` (HODLR above 4096 nodes)."""
    if solver == "auto":
        solver = "hodlr" if op.n > DENSE_THRESHOLD else "dense"
    if solver == "dense":
        return DenseSolver.from_operator(op)
    if solver == "hodlr":
        return HodlrSolver.from_operator(op, eps=eps, leaf_size=leaf_size)
    raise ValueError(f"unknown solver {solver!r}")


def _checked(x):
    if not np.all(np.isfinite(x)):
        raise SolverError("solve produced non-finite values")
    return x


# -- solves -----------------------------------------------------------------
def solve_cfie(boundary: DiscretizedBoundary, wave: IncidentWave | None = None, rhs=None,
               solver="auto", eta: float | None = None, k: float | None = None) -> DensitySolution:
    """Solve ``(1/2 I + D - i eta S) phi = rhs``.

    ``rhs`` defaults to ``-u_inc`` at the nodes. ``solver`` is a method
    name or an existing factorization of the CFIE matrix (which fixes ``k``
    and ``eta``). ``rhs`` may hold several columns.
    """
    k = wave.k if wave is not None else k
    if k is None:
        raise ValueError("need a wave or a wavenumber")
    if isinstance(solver, str):
        eta = coupling(k) if eta is None else eta
        solver = factorize(assemble_layer("CFIE", k, boundary, eta=eta), solver)
    else:
        eta = coupling(k) if eta is None else eta
    if rhs is None:
        if wave is None:
            raise ValueError("need a wave when no right-hand side is given")
        rhs = -wave.values(boundary.nodes)
    phi = _checked(solver.solve(np.asarray(rhs, dtype=complex)))
    return DensitySolution("cfie", phi, float(k), boundary, float(eta))


def solve_green(boundary: DiscretizedBoundary, wave: IncidentWave | None = None, solver="auto",
                eta: float | None = None, dirichlet=None, neumann=None,
                k: float | None = None) -> DensitySolution:
    """Solve for the total-field normal derivative on the boundary.

    ``dirichlet`` and ``neumann`` override ``u_inc`` and ``du_inc/dnu`` at the
    nodes, e.g. for a point-source incident field.
    """
    k = wave.k if wave is not None else k
    if k is None:
        raise ValueError("need a wave or a wavenumber")
    eta = coupling(k) if eta is None else eta
    if isinstance(solver, str):
        solver = factorize(assemble_layer("GREEN", k, boundary, eta=eta), solver)
    if dirichlet is None:
        dirichlet = wave.values(boundary.nodes)
    if neumann is None:
        neumann = wave.normal_derivative(boundary.nodes, boundary.normals)
    rhs = np.asarray(neumann, dtype=complex) - 1j * eta * np.asarray(dirichlet, dtype=complex)
    psi = _checked(solver.solve(rhs))
    return DensitySolution("dudn", psi, float(k), boundary, float(eta))


def farfield_operator(kind: str, k: float, boundary: DiscretizedBoundary, angles,
                      eta: float | None = None) -> np.ndarray:
    """Matrix mapping a density of the given kind to far-field samples."""
    if kind == "cfie":
        eta = coupling(k) if eta is None else eta
        return (assemble_farfield("Dinf", k, boundary, angles)
                - 1j * eta * assemble_farfield("Sinf", k, boundary, angles))
    if kind == "dudn":
        return -assemble_farfield("Sinf", k, boundary, angles)
    raise ValueError(f"unknown density kind {kind!r}")


def far_field(density: DensitySolution, angles, direction=(1.0, 0.0)) -> FarFieldData | np.ndarray:
    """Far-field pattern of a solved density at the given angles.

    Returns :class:`FarFieldData` for a single density column, otherwise the
    ``(M, m)`` array of patterns.
    """
    angles = np.asarray(angles, dtype=np.float64)
    a = farfield_operator(density.kind, density.k, density.boundary, angles, density.eta)
    vals = a @ density.values
    if vals.ndim == 1:
        return FarFieldData(density.k, tuple(direction), angles, vals)
    return vals


def scattered_field(density: DensitySolution, targets) -> np.ndarray:
    """Scattered field at points away from the boundary (plain trapezoid rule)."""
    bnd = density.boundary
    tg = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if density.kind == "cfie":
        blk = kernel_block(density.k, tg, bnd.nodes, None, bnd.normals,
                           -1j * density.eta, 1.0, 0.0)
        return (blk * bnd.weights) @ density.values
    if density.kind == "dudn":
        blk = kernel_block(density.k, tg, bnd.nodes, None, None, 1.0, 0.0, 0.0)
        return -(blk * bnd.weights) @ density.values
    raise ValueError(f"unknown density kind {density.kind!r}")


def scatter(boundary: DiscretizedBoundary, wave: IncidentWave, m: int, method: str = "cfie",
            solver="auto") -> FarFieldData:
    """Far field at the standard ``M``-point grid for one incident wave."""
    angles = measurement_angles(m)
    if method == "cfie":
        dens = solve_cfie(boundary, wave, solver=solver)
    elif method == "green":
        dens = solve_green(boundary, wave, solver=solver)
    else:
        raise ValueError(f"unknown method {method!r}")
    return far_field(dens, angles, wave.d)


def resolution(k: float, length: float, factor: float = 100.0, minimum: int = 0,
               even: bool = False) -> int:
    """``N = ceil(factor * k * length)`` (at least ``minimum``), optionally rounded up to even."""
    n = max(int(math.ceil(factor * k * length)), int(minimum))
    if even and n % 2:
        n += 1
    return n


def point_source_test(curve, k: float, n: int, solver: str = "dense", source=(0.0, 0.0),
                      target=(10.0, 8.0), eps: float = 1e-10, return_density: bool = False):
    """Exterior Dirichlet problem whose exact solution is ``-G(x, source)``.

    ``source`` must lie inside ``curve``. Returns ``(error, seconds)`` at
    ``target`` (plus the density if requested); the time covers
    discretization, factorization and solve.
    """
    t0 = time.perf_counter()
    bnd = sample(curve, n)
    src = np.asarray(source, dtype=np.float64)
    op = assemble_layer("CFIE", k, bnd)
    fac = factorize(op, solver, eps=eps)
    dens = solve_cfie(bnd, rhs=-green(k, bnd.nodes, src), solver=fac, k=k, eta=op.eta)
    u = scattered_field(dens, np.asarray(target, dtype=np.float64))[0]
    elapsed = time.perf_counter() - t0
    err = abs(u + green(k, np.asarray(target, dtype=np.float64), src))
    if return_density:
        return float(err), elapsed, dens
    return float(err), elapsed
