"""Synthetic far-field measurements with relative Gaussian noise.

For every stage ``j`` and direction ``l`` of an inversion configuration the
forward problem is solved on the true curve at ``N = ceil(100 k |Gamma|)``
nodes, and the far field is perturbed as

    v = u + delta * ||u|| / ||e|| * e,   e = e1 + i e2,

with ``e1``, ``e2`` independent standard normal vectors over the measurement
angles. Each record draws from its own generator seeded by ``(seed, j, l)``.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _threads
from .curve import ClosedCurve, is_simple, load_curve, sample, save_curve
from .forward import FarFieldData, factorize, far_field, resolution, solve_cfie
from .potentials import assemble_layer, coupling, measurement_angles
from .rla import RlaConfig

DATASET_FILE = "dataset.json"


class DatasetError(ValueError):
    """Missing or inconsistent dataset content."""


@dataclass(frozen=True)
class NoiseModel:
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("noise level must be >= 0")

    def rng(self, j: int, l: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), int(j), int(l)])

    def apply(self, u: np.ndarray, j: int, l: int) -> np.ndarray:
        if self.delta == 0:
            return np.array(u, dtype=complex)
        g = self.rng(j, l)
        e = g.standard_normal(u.shape) + 1j * g.standard_normal(u.shape)
        return u + (self.delta * np.linalg.norm(u) / np.linalg.norm(e)) * e


@dataclass
class Dataset:
    """Measured far fields keyed by 1-based ``(j, l)``.

    ``clean`` holds the noiseless fields when they are available.
    """

    records: dict
    delta: float
    seed: int
    clean: dict = field(default_factory=dict)
    true_curve: str | None = None
    n_synth: dict = field(default_factory=dict)

    def __call__(self, k: float, d) -> FarFieldData:
        for rec in self.records.values():
            if abs(rec.k - k) < 1e-9 and math.hypot(rec.direction[0] - d[0],
                                                     rec.direction[1] - d[1]) < 1e-9:
                return rec
        raise DatasetError(f"dataset has no record for k={k:g}, d=({d[0]:.6g}, {d[1]:.6g})")

    def __len__(self) -> int:
        return len(self.records)

    def save(self, outdir, true_curve: ClosedCurve | None = None) -> Path:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        for (j, l), rec in sorted(self.records.items()):
            name = f"farfield_j{j:03d}_l{l:03d}.json"
            rec.save(out / name)
            entry = {"j": j, "l": l, "k": rec.k, "direction": list(rec.direction), "file": name,
                     "n_synth": self.n_synth.get(j)}
            if (j, l) in self.clean:
                cname = f"clean_j{j:03d}_l{l:03d}.json"
                self.clean[(j, l)].save(out / cname)
                entry["clean_file"] = cname
            entries.append(entry)
        curve_file = self.true_curve
        if true_curve is not None:
            curve_file = "true_curve.json"
            save_curve(true_curve, out / curve_file)
        meta = {"delta": self.delta, "seed": self.seed, "true_curve": curve_file,
                "records": entries}
        (out / DATASET_FILE).write_text(json.dumps(meta, indent=2))
        return out

    @classmethod
    def load(cls, path) -> "Dataset":
        root = Path(path)
        try:
            meta = json.loads((root / DATASET_FILE).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"cannot read dataset index in {root}: {exc}") from exc
        records, clean, nsyn = {}, {}, {}
        for e in meta["records"]:
            key = (int(e["j"]), int(e["l"]))
            f = root / e["file"]
            if not f.exists():
                raise DatasetError(f"missing record file {f.name} for k={e['k']:g}, "
                                   f"d=({e['direction'][0]:.6g}, {e['direction'][1]:.6g})")
            records[key] = FarFieldData.load(f)
            if e.get("clean_file"):
                clean[key] = FarFieldData.load(root / e["clean_file"])
            if e.get("n_synth") is not None:
                nsyn[key[0]] = int(e["n_synth"])
        return cls(records, float(meta["delta"]), int(meta["seed"]), clean,
                   meta.get("true_curve"), nsyn)


def synthesize(true_curve: ClosedCurve, config: RlaConfig, noise: NoiseModel,
               solver: str = "auto", n_factor: float = 100.0, keep_clean: bool = True,
               progress=None) -> Dataset:
    """Far-field data for every ``(k_j, d_l)`` of ``config``."""
    if not is_simple(true_curve):
        raise ValueError("true curve is not simple")
    angles = measurement_angles(config.M)
    records, clean, nsyn = {}, {}, {}

    def stage(j):
        k = config.wavenumber(j)
        n = resolution(k, true_curve.length, n_factor, minimum=2 * true_curve.bandwidth() + 2)
        n = max(n, 128)
        bnd = sample(true_curve, n)
        t0 = time.perf_counter()
        fac = factorize(assemble_layer("CFIE", k, bnd), solver)
        waves = config.waves(k)
        rhs = np.stack([-w.values(bnd.nodes) for w in waves], axis=1)
        dens = solve_cfie(bnd, rhs=rhs, solver=fac, k=k, eta=coupling(k))
        return j, k, n, waves, far_field(dens, angles), time.perf_counter() - t0

    # stages are independent; LAPACK releases the GIL
    workers = min(_threads.get(), config.J)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for j, k, n, waves, u, dt in pool.map(stage, range(1, config.J + 1)):
            nsyn[j] = n
            for l, w in enumerate(waves, start=1):
                uc = u[:, l - 1]
                clean[(j, l)] = FarFieldData(k, w.d, angles, uc)
                records[(j, l)] = FarFieldData(k, w.d, angles, noise.apply(uc, j, l))
            if progress:
                progress(j, k, n, dt)
    return Dataset(records, noise.delta, noise.seed, clean if keep_clean else {}, None, nsyn)


def noise_ratio(dataset: Dataset) -> dict:
    """``||v - u|| / ||u||`` for every record with clean data."""
    out = {}
    for key, rec in dataset.records.items():
        c = dataset.clean.get(key)
        if c is not None:
            out[key] = float(np.linalg.norm(rec.values - c.values) / np.linalg.norm(c.values))
    return out


def load_true_curve(dataset_dir) -> ClosedCurve | None:
    meta = json.loads((Path(dataset_dir) / DATASET_FILE).read_text())
    name = meta.get("true_curve")
    return load_curve(Path(dataset_dir) / name) if name else None
