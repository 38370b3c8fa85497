"""Acceptance criteria 1-10 at their stated tolerances.

Each criterion records a PASS/FAIL line printed in the terminal summary.
Criteria 5, 6, 7 and 10 share one full Example-1 reconstruction.
"""
import time

import numpy as np
import pytest
from scipy.special import hankel1, jv

from conftest import record_criterion
from helio2d import hodlr
from helio2d.curve import ClosedCurve, hausdorff, is_simple, modes, perturb, sample
from helio2d.forward import (IncidentWave, factorize, far_field, point_source_test, resolution,
                             scatter, solve_cfie)
from helio2d.inverse import Linearization, PerturbationBasis, frechet_apply
from helio2d.potentials import assemble_layer, measurement_angles
from helio2d.quadrature import alpert_correction_row, alpert_rule
from helio2d.rla import RlaConfig, run_rla
from helio2d.synth import NoiseModel, noise_ratio, synthesize

pytestmark = pytest.mark.acceptance

STAR = ClosedCurve.star(n=64)


def check(number, ok, detail):
    record_criterion(number, bool(ok), detail)
    assert ok, f"criterion {number}: {detail}"


# -- 1 ------------------------------------------------------------------------
@pytest.mark.parametrize("k", [1.0, 2.0, 4.0, 8.0])
def test_c01_table1_dense(k):
    n = resolution(k, STAR.length)
    err, secs = point_source_test(STAR, k, n, "dense")
    check(1, err <= 1e-10 and secs <= 60.0,
          f"k={k:g} N={n} dense error {err:.2e} (<=1e-10) in {secs:.1f}s (<=60s)")


def test_c01_table1_hodlr_k16():
    k = 16.0
    n = resolution(k, STAR.length)
    err, secs = point_source_test(STAR, k, n, "hodlr", eps=1e-10)
    check(1, err <= 1e-9, f"k=16 N={n} HODLR error {err:.2e} (<=1e-9) in {secs:.1f}s")
    # dense reference: the N = 100 k |Gamma| matrix (8 GB) does not fit in memory here,
    # so the HODLR-vs-dense comparison uses the N = 360 k discretization
    n = 5760
    e_h, _, d_h = point_source_test(STAR, k, n, "hodlr", eps=1e-10, return_density=True)
    e_d, _, d_d = point_source_test(STAR, k, n, "dense", return_density=True)
    diff = np.linalg.norm(d_h.values - d_d.values) / np.linalg.norm(d_d.values)
    check(1, diff <= 1e-8 and e_h <= 1e-9,
          f"k=16 N={n} HODLR-vs-dense {diff:.2e} (<=1e-8), HODLR error {e_h:.2e}")


# -- 2 ------------------------------------------------------------------------
def _mie(k, theta, alpha, nmax=80):
    n = np.arange(-nmax, nmax + 1)
    s = (jv(n, k) / hankel1(n, k) * np.exp(1j * np.outer(theta - alpha, n))).sum(axis=1)
    return -np.sqrt(2 / (np.pi * k)) * np.exp(-0.25j * np.pi) * s


@pytest.mark.parametrize("k", [1.0, 5.0])
@pytest.mark.parametrize("method", ["cfie", "green"])
def test_c02_mie(k, method):
    circle = ClosedCurve.circle(1.0)
    bnd = sample(circle, max(resolution(k, circle.length), 256))
    ff = scatter(bnd, IncidentWave.from_angle(k, 0.3), 64, method, "dense")
    ref = _mie(k, ff.angles, 0.3)
    err = np.linalg.norm(ff.values - ref) / np.linalg.norm(ref)
    check(2, err <= 1e-10, f"{method} k={k:g} rel l2 {err:.2e} (<=1e-10)")


# -- 3 ------------------------------------------------------------------------
@pytest.mark.parametrize("k", [2.0, 6.0])
def test_c03_cross_formulation(k):
    bnd = sample(STAR, resolution(k, STAR.length))
    w = IncidentWave.from_angle(k, 0.9)
    a = scatter(bnd, w, 64, "cfie", "dense").values
    b = scatter(bnd, w, 64, "green", "dense").values
    err = np.linalg.norm(a - b) / np.linalg.norm(a)
    check(3, err <= 1e-9, f"k={k:g} CFIE vs Green {err:.2e} (<=1e-9)")


# -- 4 ------------------------------------------------------------------------
def test_c04_frechet():
    star = ClosedCurve.star(n=512)      # fine sampling so perturb() is exact to round-off
    k, h = 2.0, 1e-4
    n = resolution(k, star.length)
    waves = [IncidentWave.from_angle(k, 2 * np.pi * l / 4) for l in range(1, 5)]
    angles = measurement_angles(32)
    lin = Linearization.build(sample(star, n), waves, angles, "dense")

    def farfields(curve):
        bnd = sample(curve, n)
        rhs = np.stack([-w.values(bnd.nodes) for w in waves], axis=1)
        return far_field(solve_cfie(bnd, rhs=rhs, k=k, solver="dense"), angles)

    basis = PerturbationBasis(2 * int(np.ceil(k)) + 1)
    rng = np.random.default_rng(2024)
    errs = []
    for _ in range(5):
        c = rng.standard_normal(basis.b)
        lin_p = frechet_apply(lin, basis.evaluate(c, lin.boundary.params))
        fd = (farfields(perturb(star, c, h)) - lin.predicted) / h
        errs.append(np.linalg.norm(fd - lin_p) / np.linalg.norm(lin_p))
    check(4, max(errs) <= 1e-3, f"max FD rel error at h=1e-4: {max(errs):.2e} (<=1e-3)")


# -- 5, 6, 7, 10 --------------------------------------------------------------
def example1_config(**kw):
    return RlaConfig(k0=0.5, dk=0.5, J=kw.pop("J", 11), L=4, M=32,
                     bandlimit="2ceil_k_plus_1", nb=50, **kw)


@pytest.fixture(scope="module")
def example1():
    cfg = example1_config()
    t0 = time.perf_counter()
    data = synthesize(STAR, cfg, NoiseModel(0.05, 1))
    state = run_rla(cfg, data, keep_iterates=True)
    return cfg, data, state, time.perf_counter() - t0


def test_c05_example1(example1):
    cfg, _, state, secs = example1
    h = hausdorff(state.curve, STAR)
    done = not state.failed and len(state.stages) == cfg.J
    check(5, done and h <= 0.05 and secs <= 1800,
          f"{len(state.stages)}/{cfg.J} stages, Hausdorff {h:.4f} (<=0.05), {secs:.0f}s (<=1800s)")


def test_c05_smoke():
    cfg = example1_config(J=4)
    t0 = time.perf_counter()
    state = run_rla(cfg, synthesize(STAR, cfg, NoiseModel(0.05, 1)))
    secs = time.perf_counter() - t0
    check(5, not state.failed and len(state.stages) == 4 and secs <= 180,
          f"smoke J=4 completed={not state.failed} in {secs:.0f}s (<=180s)")


def test_c06_iteration_shape(example1):
    its = example1[2].iterations
    ok = len(its) >= 3 and all(its[0] >= 2 * i for i in its[2:])
    check(6, ok, f"iterations per stage {its}")


def _arclength_gaps(src, t):
    x, w = np.polynomial.legendre.leggauss(30)
    tt = np.append(t, t[0] + 2 * np.pi)
    a, b = tt[:-1, None], tt[1:, None]
    s = 0.5 * (b - a) * x + 0.5 * (a + b)
    speed = np.hypot(*np.moveaxis(src.evaluate(s, deriv=1), -1, 0))
    return (0.5 * (b - a)[:, 0]) * (speed @ w)


def test_c07_regularization_invariants(example1):
    cfg, _, state, _ = example1
    worst_tail, worst_gap, simple, count = 0.0, 0.0, True, 0
    for rec in state.stages:
        for it, (src, t) in zip(rec.iterates, rec.sources):
            count += 1
            simple &= is_simple(it, max(4096, 8 * it.bandwidth()))
            m = np.abs(modes(src.n_modes))
            top = max(np.abs(src.coeffs_x).max(), np.abs(src.coeffs_y).max())
            hi = m > rec.b + cfg.nb
            tail = max(np.abs(src.coeffs_x[hi]).max(initial=0.0),
                       np.abs(src.coeffs_y[hi]).max(initial=0.0)) / top
            worst_tail = max(worst_tail, tail)
            np.testing.assert_allclose(it.samples(), src.evaluate(t), atol=1e-10)
            gaps = _arclength_gaps(src, t)
            worst_gap = max(worst_gap, np.ptp(gaps) / gaps.mean())
    check(7, count > 0 and simple and worst_tail <= 1e-12 and worst_gap <= 1e-8,
          f"{count} iterates, all simple={simple}, Fourier tail {worst_tail:.1e} (<=1e-12), "
          f"arclength spacing spread {worst_gap:.1e} (<=1e-8)")


def test_c10_noise_identity(example1):
    ratios = noise_ratio(example1[1])
    worst = max(abs(r - 0.05) for r in ratios.values())
    check(10, len(ratios) == 44 and worst <= 1e-14,
          f"{len(ratios)} records, max |ratio - delta| {worst:.1e} (<=1e-14)")


# -- 8 ------------------------------------------------------------------------
def test_c08_quadrature():
    rule = alpert_rule(16)

    def integral(n, sigma):
        t = 2 * np.pi * 5 / n
        idx, w = alpert_correction_row(rule, n, 5, lambda s: np.log(4 * np.sin((s - t) / 2) ** 2))
        return w @ sigma(2 * np.pi * idx / n, t), t

    a = 1.2
    exact = 4 * np.pi / np.sqrt(a * a - 1) * np.log(1 - (a - np.sqrt(a * a - 1)))
    ns = np.array([96, 112, 128, 160, 192])
    errs = [abs(integral(n, lambda s, t: 1 / (a - np.cos(s - t)))[0] - exact) / abs(exact) for n in ns]
    order = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    i0, _ = integral(128, lambda s, t: np.ones_like(s))
    i1, t = integral(128, lambda s, t: np.cos(s))
    id_err = max(abs(i0), abs(i1 + 2 * np.pi * np.cos(t)))
    check(8, order >= 12 and id_err <= 1e-12,
          f"empirical order {order:.1f} (>=12), identity error at N=128 {id_err:.1e} (<=1e-12)")


# -- 9 ------------------------------------------------------------------------
def test_c09_hodlr_scaling():
    times, errs = [], []
    for n in (2880, 5760, 11520):
        k = n / 360
        op = assemble_layer("CFIE", k, sample(STAR, n))
        t0 = time.perf_counter()
        h = hodlr.compress(op.entries, n, leaf_size=128, eps=1e-10).factorize()
        times.append(time.perf_counter() - t0)
        errs.append(point_source_test(STAR, k, n, "hodlr", eps=1e-10)[0])
    ratios = [b / a for a, b in zip(times, times[1:])]
    check(9, max(ratios) <= 3.0 and max(errs) <= 1e-9,
          f"factorization times {[round(t, 2) for t in times]}s, ratios "
          f"{[round(r, 2) for r in ratios]} (<=3.0), point-source errors "
          f"{[f'{e:.1e}' for e in errs]} (<=1e-9)")
