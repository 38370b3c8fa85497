"""Recursive linearization: sweep wavenumbers, warm-starting each Newton solve.

Stage ``j = 1..J`` runs at ``k_j = k0 + (j - 1) dk`` with ``L`` incident
directions at angles ``2 pi l / L`` and a bandlimit growing with ``k``.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .curve import ClosedCurve, is_simple, load_curve, save_curve
from .forward import IncidentWave
from .inverse import NewtonControls, NewtonResult, PerturbationBasis, run_newton
from .potentials import measurement_angles
from .quadrature import alpert_rule

log = logging.getLogger(__name__)

BANDLIMIT_RULES = ("ceil_k", "2ceil_k_plus_1", "custom")


class ConfigError(ValueError):
    """Invalid inversion configuration."""


@dataclass
class RhoSchedule:
    """Damping ``rho(k)``: ``low`` up to ``k_switch``, then ``scale / k``.

    ``table`` (list of ``[k, rho]``) overrides the rule at matching ``k``.
    """

    low: float = 0.1
    k_switch: float | None = 5.0
    scale: float = 0.1
    table: list = field(default_factory=list)

    def __call__(self, k: float) -> float:
        for kk, rho in self.table:
            if abs(kk - k) < 1e-9:
                return float(rho)
        if self.k_switch is None or k <= self.k_switch + 1e-12:
            return self.low
        return self.scale / k


@dataclass
class RlaConfig:
    """Frequency sweep and per-stage inversion parameters (JSON-serializable)."""

    k0: float = 0.5
    dk: float = 0.5
    J: int = 11
    L: int = 4
    M: int = 32
    bandlimit: str = "2ceil_k_plus_1"
    custom_b: list = field(default_factory=list)
    nb: int = 50
    rho: RhoSchedule = field(default_factory=RhoSchedule)
    newton: NewtonControls = field(default_factory=NewtonControls)
    n_factor: float = 10.0
    n_min: int = 0
    solver: str = "auto"
    initial_curve: str | None = None

    def __post_init__(self):
        if isinstance(self.rho, dict):
            self.rho = RhoSchedule(**self.rho)
        if isinstance(self.newton, dict):
            self.newton = NewtonControls(**self.newton)
        self.validate()

    def validate(self) -> None:
        if not (self.k0 > 0 and self.dk > 0 and self.J >= 1 and self.L >= 1 and self.M >= 1):
            raise ConfigError("need k0 > 0, dk > 0, J >= 1, L >= 1, M >= 1")
        if self.bandlimit not in BANDLIMIT_RULES:
            raise ConfigError(f"bandlimit must be one of {BANDLIMIT_RULES}")
        if self.bandlimit == "custom" and len(self.custom_b) != self.J:
            raise ConfigError("custom bandlimit needs one b per stage")
        if self.nb < 1 or self.n_factor <= 0:
            raise ConfigError("need nb >= 1 and n_factor > 0")
        bmax = max(self.bandlimit_at(j) for j in range(1, self.J + 1))
        if self.M <= bmax // 2 and 2 * self.M * self.L <= bmax:
            raise ConfigError(f"M={self.M} too small for bandlimit {bmax}")
        if self.M <= bmax:
            warnings.warn(f"M={self.M} does not exceed the largest bandlimit {bmax}",
                          RuntimeWarning, stacklevel=2)

    def wavenumber(self, j: int) -> float:
        """``k_j`` for ``j = 1..J``."""
        return self.k0 + (j - 1) * self.dk

    def wavenumbers(self) -> list[float]:
        return [self.wavenumber(j) for j in range(1, self.J + 1)]

    def direction_angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(1, self.L + 1) / self.L

    def waves(self, k: float) -> list[IncidentWave]:
        return [IncidentWave.from_angle(k, a) for a in self.direction_angles()]

    def bandlimit_at(self, j: int) -> int:
        k = self.wavenumber(j)
        if self.bandlimit == "ceil_k":
            return int(math.ceil(k - 1e-12))
        if self.bandlimit == "2ceil_k_plus_1":
            return 2 * int(math.ceil(k - 1e-12)) + 1
        return int(self.custom_b[j - 1])

    def controls_at(self, k: float) -> NewtonControls:
        d = self.newton.to_dict()
        d.update(rho=self.rho(k), nb=self.nb)
        return NewtonControls(**d)

    def nodes_at(self, k: float, length: float, b: int) -> int:
        """Inversion discretization: ``ceil(n_factor k |Gamma|)`` with safety floors.

        The floors keep the filter passband (up to ``b + nb``) and the Alpert
        correction stencil representable.
        """
        n = math.ceil(self.n_factor * k * length)
        n = max(n, 2 * (b + self.nb) + 2, alpert_rule(16).min_points() + 1, self.n_min)
        return n + (n % 2)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RlaConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "RlaConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class StageRecord:
    j: int
    k: float
    b: int
    n: int
    rho: float
    iterations: int
    status: str
    residual: float
    history: list
    iterates: list = field(default_factory=list, repr=False)
    sources: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {"j": self.j, "k": self.k, "b": self.b, "n": self.n, "rho": self.rho,
                "iterations": self.iterations, "status": self.status,
                "residual": self.residual}


@dataclass
class RlaState:
    """Current curve plus per-stage records; ``failed`` marks an aborted sweep."""

    curve: ClosedCurve
    stages: list = field(default_factory=list)
    failed: bool = False
    message: str = ""

    @property
    def iterations(self) -> list[int]:
        return [s.iterations for s in self.stages]

    def summary(self) -> dict:
        return {"failed": self.failed, "message": self.message,
                "stages": [s.summary() for s in self.stages]}


def run_rla(config: RlaConfig, data, outdir=None, initial: ClosedCurve | None = None,
            keep_iterates: bool = False, callback=None) -> RlaState:
    """Run the frequency sweep.

    Parameters
    ----------
    data : callable or mapping
        ``data(k, d)`` (or ``data[(j, l)]`` with 1-based indices) returns the
        measured :class:`~helio2d.forward.FarFieldData`.
    outdir : path, optional
        Per-stage curve files and JSON-lines histories are written here.
    keep_iterates : bool
        Keep every accepted iterate, with its band-limited source curve and
        node parameters, in the stage records.
    """
    if initial is None:
        initial = load_curve(config.initial_curve) if config.initial_curve else ClosedCurve.circle(1.0)
    if not is_simple(initial):
        raise ConfigError("initial curve is not simple")
    lookup = _lookup(data)
    angles = measurement_angles(config.M)
    out = Path(outdir) if outdir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    state = RlaState(initial)
    curve = initial
    for j in range(1, config.J + 1):
        k = config.wavenumber(j)
        b = config.bandlimit_at(j)
        waves = config.waves(k)
        measured = [lookup(j, l + 1, k, w.d) for l, w in enumerate(waves)]
        n = config.nodes_at(k, curve.length, b)
        controls = config.controls_at(k)
        hist_file = None
        if out is not None:
            hist_file = (out / f"stage_{j:03d}_history.jsonl").open("w")

        def on_step(rep, _f=hist_file):
            if _f is not None:
                _f.write(rep.to_json() + "\n")
                _f.flush()

        try:
            res: NewtonResult = run_newton(curve, waves, measured, controls, PerturbationBasis(b),
                                           n, angles, config.solver, on_step=on_step)
        finally:
            if hist_file is not None:
                hist_file.close()
        rec = StageRecord(j, k, b, n, controls.rho, res.iterations, res.status, res.residual,
                          [asdict(h) for h in res.history])
        if keep_iterates:
            rec.sources = res.sources
            rec.iterates = res.iterates
        log.info("stage %d k=%g b=%d N=%d: %d iterations, %s, residual %.3e",
                 j, k, b, n, res.iterations, res.status, res.residual)
        if res.status == "max_iters":
            warnings.warn(f"stage {j} (k={k}) stopped at the iteration cap", RuntimeWarning,
                          stacklevel=2)
        if res.status == "failed":
            state.failed = True
            state.message = f"stage {j} (k={k}) failed: {res.error}"
            state.stages.append(rec)
            break
        curve = res.curve
        state.curve = curve
        state.stages.append(rec)
        if out is not None:
            save_curve(curve, out / f"stage_{j:03d}_curve.json")
        if callback is not None:
            callback(rec, curve)
    if out is not None:
        save_curve(state.curve, out / "final_curve.json")
        (out / "state.json").write_text(json.dumps(state.summary(), indent=2))
    return state


def _lookup(data):
    if callable(data):
        return lambda j, l, k, d: data(k, d)
    if isinstance(data, dict):
        def get(j, l, k, d):
            try:
                return data[(j, l)]
            except KeyError:
                raise KeyError(f"no measurement for k={k}, d=({d[0]:.6g}, {d[1]:.6g})") from None
        return get
    raise TypeError("data must be a callable or a mapping")
