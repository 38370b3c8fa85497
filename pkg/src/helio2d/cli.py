"""Command-line front end: ``helio2d {forward,synth,invert,filter,table1}``.

Every command writes its artifacts plus one ``manifest.json`` into its output
directory. Errors go to stderr as one JSON object per line and give a nonzero
exit code; so does a computation that misses its own accuracy target.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, _threads

MANIFEST = "manifest.json"
SYNTH_FACTOR = 100.0
log = logging.getLogger("helio2d")


class UsageError(Exception):
    """Bad input detected before any computation."""


def _fail(kind: str, message: str, code: int = 2) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(outdir, command: str, config: dict, inputs: dict, outputs: list,
                   wall_time: float, status: str, extra: dict | None = None) -> Path:
    """Write (or replace) the single run manifest of ``outdir``."""
    import numpy
    import scipy

    from ._backend import NAME

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "config_hash": _config_hash(config),
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": [str(o) for o in outputs],
        "wall_time_s": wall_time,
        "finished": datetime.now(timezone.utc).isoformat(),
        "status": status,
        "threads": _threads.get(),
        "versions": {"helio2d": __version__, "python": platform.python_version(),
                     "numpy": numpy.__version__, "scipy": scipy.__version__,
                     "kernels": NAME},
    }
    if extra:
        manifest.update(extra)
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _apply_config(args, parser_defaults: dict) -> dict:
    """Overlay ``--config`` JSON values onto the parsed options."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
    return cfg


def _overlay(args, cfg: dict, keys) -> None:
    for key in keys:
        if key in cfg:
            setattr(args, key, cfg[key])


def _load_curve_arg(path):
    from .curve import ClosedCurve, CurveError, load_curve

    if path in (None, "star"):
        return ClosedCurve.star(n=64)
    if path == "circle":
        return ClosedCurve.circle(1.0)
    try:
        return load_curve(path)
    except CurveError as exc:
        raise UsageError(str(exc)) from exc


# -- forward -------------------------------------------------------------------
def cmd_forward(args) -> int:
    import numpy as np

    from .curve import sample
    from .forward import IncidentWave, factorize, far_field, resolution, solve_cfie, solve_green
    from .potentials import assemble_layer, measurement_angles

    cfg = _apply_config(args, {})
    _overlay(args, cfg, ("curve", "k", "angle", "M", "N", "solver", "method", "eps", "out"))
    if args.table1:
        return _table1(args, [args.k], args.out)
    curve = _load_curve_arg(args.curve)
    n = args.N or resolution(args.k, curve.length)
    t0 = time.perf_counter()
    bnd = sample(curve, n)
    wave = IncidentWave.from_angle(args.k, args.angle)
    kind = "CFIE" if args.method == "cfie" else "GREEN"
    op = assemble_layer(kind, args.k, bnd)
    fac = factorize(op, args.solver, eps=args.eps)
    if args.method == "cfie":
        dens = solve_cfie(bnd, wave, solver=fac)
        rhs = -wave.values(bnd.nodes)
    else:
        dens = solve_green(bnd, wave, solver=fac)
        rhs = wave.normal_derivative(bnd.nodes, bnd.normals) - 1j * op.eta * wave.values(bnd.nodes)
    ff = far_field(dens, measurement_angles(args.M), wave.d)
    elapsed = time.perf_counter() - t0
    resid = float(np.linalg.norm(op.matvec(dens.values) - rhs) / np.linalg.norm(rhs))
    tol = 1e-10 if fac.method == "dense" else 100 * args.eps
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ff.save(out / "farfield.json")
    ok = resid <= tol
    summary = {"k": args.k, "N": n, "solver": fac.method, "method": args.method,
               "seconds": elapsed, "relative_residual": resid, "tolerance": tol, "ok": ok}
    print(json.dumps(summary))
    write_manifest(out, "forward", vars_config(args), {"curve": args.curve},
                   ["farfield.json"], elapsed, "ok" if ok else "tolerance_missed",
                   {"result": summary})
    return 0 if ok else 1


def vars_config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}


# -- table1 --------------------------------------------------------------------
def cmd_table1(args) -> int:
    cfg = _apply_config(args, {})
    _overlay(args, cfg, ("k", "solver", "n_rule", "eps", "out", "compare_dense"))
    return _table1(args, args.k, args.out)


def _table1(args, ks, outdir) -> int:
    import numpy as np

    from .curve import ClosedCurve
    from .forward import point_source_test, resolution

    star = ClosedCurve.star(n=64)
    rows = []
    ok = True
    t_all = time.perf_counter()
    for k in ks:
        if getattr(args, "n_rule", "100L") == "360k":
            n = int(round(360 * k))
        else:
            n = resolution(k, star.length)
        err, secs, dens = point_source_test(star, k, n, args.solver, eps=args.eps,
                                            return_density=True)
        method = args.solver if args.solver != "auto" else ("hodlr" if n > 4096 else "dense")
        tol = 1e-10 if method == "dense" else 1e-9
        row = {"k": k, "N": n, "solver": method, "seconds": secs, "error": err,
               "tolerance": tol, "ok": err <= tol}
        if getattr(args, "compare_dense", False) and method == "hodlr":
            _, _, dd = point_source_test(star, k, n, "dense", return_density=True)
            row["hodlr_vs_dense"] = float(np.linalg.norm(dens.values - dd.values)
                                          / np.linalg.norm(dd.values))
            row["ok"] = row["ok"] and row["hodlr_vs_dense"] <= 1e-8
        ok = ok and row["ok"]
        rows.append(row)
        print(json.dumps(row), flush=True)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table1.json").write_text(json.dumps(rows, indent=2))
    write_manifest(out, "table1", vars_config(args), {}, ["table1.json"],
                   time.perf_counter() - t_all, "ok" if ok else "tolerance_missed")
    return 0 if ok else 1


# -- synth ---------------------------------------------------------------------
def _rla_config(args):
    from .rla import ConfigError, RlaConfig

    try:
        cfg = RlaConfig.load(args.config) if args.config else RlaConfig()
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def cmd_synth(args) -> int:
    from .synth import NoiseModel, noise_ratio, synthesize

    cfg = _rla_config(args)
    if args.L is not None:
        cfg.L = args.L
        cfg.validate()
    curve = _load_curve_arg(args.curve)
    t0 = time.perf_counter()
    ds = synthesize(curve, cfg, NoiseModel(args.delta, args.seed), solver=args.solver,
                    progress=lambda j, k, n, dt: log.info("k=%g N=%d %.2fs", k, n, dt))
    ds.save(args.out, true_curve=curve)
    ratios = noise_ratio(ds)
    worst = max((abs(r - args.delta) for r in ratios.values()), default=0.0)
    ok = worst <= 1e-14
    elapsed = time.perf_counter() - t0
    summary = {"records": len(ds), "delta": args.delta, "seed": args.seed,
               "max_noise_identity_error": worst, "ok": ok}
    print(json.dumps(summary))
    write_manifest(args.out, "synth", {**cfg.to_dict(), "delta": args.delta, "seed": args.seed},
                   {"curve": args.curve, "config": args.config}, ["dataset.json"], elapsed,
                   "ok" if ok else "tolerance_missed", {"result": summary})
    return 0 if ok else 1


# -- invert --------------------------------------------------------------------
def cmd_invert(args) -> int:
    from .curve import hausdorff
    from .synth import Dataset, DatasetError, load_true_curve

    cfg = _rla_config(args)
    try:
        ds = Dataset.load(args.data)
    except DatasetError as exc:
        raise UsageError(str(exc)) from exc
    # every (k_j, d_l) the sweep needs must be present before starting
    for j in range(1, cfg.J + 1):
        k = cfg.wavenumber(j)
        for w in cfg.waves(k):
            try:
                ds(k, w.d)
            except DatasetError as exc:
                raise UsageError(str(exc)) from exc
    # inversion must not reuse the synthesis discretization (inverse crime)
    if ds.n_synth and cfg.n_factor >= SYNTH_FACTOR:
        raise UsageError(f"inversion n_factor={cfg.n_factor:g} must be below the "
                         f"synthesis factor {SYNTH_FACTOR:g}")
    from .rla import run_rla

    t0 = time.perf_counter()
    state = run_rla(cfg, ds, outdir=args.out)
    elapsed = time.perf_counter() - t0
    summary = state.summary()
    true = None
    try:
        true = load_true_curve(args.data)
    except (OSError, ValueError):
        true = None
    if true is not None:
        summary["hausdorff_to_true"] = hausdorff(state.curve, true)
    summary["iterations"] = state.iterations
    summary["seconds"] = elapsed
    print(json.dumps({k: v for k, v in summary.items() if k != "stages"}))
    ok = not state.failed
    write_manifest(args.out, "invert", cfg.to_dict(), {"data": args.data, "config": args.config},
                   ["final_curve.json", "state.json"], elapsed, "ok" if ok else "stage_failed",
                   {"result": {k: v for k, v in summary.items() if k != "stages"}})
    return 0 if ok else 1


# -- filter --------------------------------------------------------------------
def cmd_filter(args) -> int:
    from .curve import CurveError, filter_resample, save_curve

    cfg = _apply_config(args, {})
    _overlay(args, cfg, ("curve", "b", "nb", "N", "out"))
    curve = _load_curve_arg(args.curve)
    t0 = time.perf_counter()
    try:
        new = filter_resample(curve, args.b, args.nb, args.N)
    except CurveError as exc:
        return _fail("curve", str(exc), 1)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_curve(new, out)
    elapsed = time.perf_counter() - t0
    write_manifest(out.parent, "filter", vars_config(args), {"curve": args.curve}, [out.name],
                   elapsed, "ok")
    print(json.dumps({"out": str(out), "length": new.length, "seconds": elapsed}))
    return 0


# -- parser --------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="helio2d", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"helio2d {__version__}")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $HELIO2D_THREADS or CPU count)")
    p.add_argument("-v", "--verbose", action="store_true", help="progress logging")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="far field of one incident plane wave")
    f.add_argument("--curve", default="star", help="curve JSON file, or 'star'/'circle'")
    f.add_argument("--k", type=float, default=1.0)
    f.add_argument("--angle", type=float, default=0.0, help="incidence angle (radians)")
    f.add_argument("--M", type=int, default=32, help="number of far-field angles")
    f.add_argument("--N", type=int, default=None, help="nodes (default ceil(100 k |Gamma|))")
    f.add_argument("--solver", choices=("auto", "dense", "hodlr"), default="auto")
    f.add_argument("--method", choices=("cfie", "green"), default="cfie")
    f.add_argument("--eps", type=float, default=1e-10, help="HODLR tolerance")
    f.add_argument("--table1", action="store_true", help="point-source benchmark at --k")
    f.add_argument("--n-rule", dest="n_rule", choices=("100L", "360k"), default="100L")
    f.add_argument("--compare-dense", dest="compare_dense", action="store_true")
    f.add_argument("--config")
    f.add_argument("--out", default="forward_out")
    f.set_defaults(func=cmd_forward)

    t = sub.add_parser("table1", help="point-source accuracy/timing benchmark on the star")
    t.add_argument("--k", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0])
    t.add_argument("--solver", choices=("auto", "dense", "hodlr"), default="dense")
    t.add_argument("--n-rule", dest="n_rule", choices=("100L", "360k"), default="100L",
                   help="N = ceil(100 k |Gamma|) or N = 360 k")
    t.add_argument("--eps", type=float, default=1e-10)
    t.add_argument("--compare-dense", dest="compare_dense", action="store_true",
                   help="also solve densely and report the HODLR/dense difference")
    t.add_argument("--config")
    t.add_argument("--out", default="table1_out")
    t.set_defaults(func=cmd_table1)

    s = sub.add_parser("synth", help="synthetic noisy far-field dataset")
    s.add_argument("--curve", default="star")
    s.add_argument("--config", help="inversion config JSON (frequencies, L, M)")
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--L", type=int, default=None, help="override number of directions")
    s.add_argument("--solver", choices=("auto", "dense", "hodlr"), default="auto")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    i = sub.add_parser("invert", help="recursive-linearization reconstruction")
    i.add_argument("--data", required=True, help="dataset directory")
    i.add_argument("--config", help="inversion config JSON")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_invert)

    fl = sub.add_parser("filter", help="low-pass filter and arclength resampling")
    fl.add_argument("--curve", required=True)
    fl.add_argument("--b", type=int, required=True)
    fl.add_argument("--nb", type=int, default=50)
    fl.add_argument("--N", type=int, required=True)
    fl.add_argument("--config")
    fl.add_argument("--out", required=True, help="output curve file")
    fl.set_defaults(func=cmd_filter)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads.configure(args.threads)
    except ValueError as exc:
        return _fail("usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc))
    except (ValueError, RuntimeError, KeyError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
