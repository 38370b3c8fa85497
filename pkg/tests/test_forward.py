import numpy as np
import pytest
from scipy.special import h1vp, hankel1, jv, jvp

from helio2d.curve import ClosedCurve, sample
from helio2d.forward import (FarFieldData, IncidentWave, SolverError, factorize, far_field,
                             point_source_test, scatter, scattered_field, solve_cfie,
                             solve_green)
from helio2d.potentials import assemble_layer, measurement_angles
from helio2d.specfun import green, green_grad


def mie_farfield(k, theta, alpha, nmax=60):
    n = np.arange(-nmax, nmax + 1)
    c = jv(n, k) / hankel1(n, k)
    s = (c[None, :] * np.exp(1j * np.outer(theta - alpha, n))).sum(axis=1)
    return -np.sqrt(2 / (np.pi * k)) * np.exp(-0.25j * np.pi) * s


@pytest.mark.parametrize("k", [1.0, 5.0])
@pytest.mark.parametrize("method", ["cfie", "green"])
def test_circle_matches_mie(circle, k, method):
    bnd = sample(circle, 256)
    alpha = 0.4
    ff = scatter(bnd, IncidentWave.from_angle(k, alpha), 32, method=method)
    ref = mie_farfield(k, ff.angles, alpha)
    assert np.linalg.norm(ff.values - ref) / np.linalg.norm(ref) <= 1e-10


def test_boundary_normal_derivative_on_circle(circle):
    # du/dr on r = 1 for the plane wave along +x: sum i^n (-2i / (pi H_n(k))) e^{i n t}
    k = 3.0
    bnd = sample(circle, 200)
    psi = solve_green(bnd, IncidentWave.from_angle(k, 0.0), solver="dense").values
    n = np.arange(-50, 51)
    ref = ((1j ** n) * (-2j / (np.pi * hankel1(n, k)))
           * np.exp(1j * np.outer(bnd.params, n))).sum(axis=1)
    assert np.linalg.norm(psi - ref) / np.linalg.norm(ref) <= 1e-11


def test_green_path_exterior_point_source(circle):
    # incident field G(., z) from an exterior source; addition-theorem oracle
    k, z = 2.0, np.array([0.0, 3.0])
    bnd = sample(circle, 200)
    u_inc = green(k, bnd.nodes, z)
    dn = np.einsum("ij,ij->i", green_grad(k, z, bnd.nodes), bnd.normals)
    dens = solve_green(bnd, k=k, dirichlet=u_inc, neumann=dn, solver="dense")
    target = np.array([[4.0, -2.5]])
    r, th = np.hypot(*target[0]), np.arctan2(target[0, 1], target[0, 0])
    n = np.arange(-60, 61)
    ref = (-0.25j * jv(n, k) / hankel1(n, k) * hankel1(n, 3 * k) * hankel1(n, k * r)
           * np.exp(1j * n * (th - np.pi / 2))).sum()
    assert abs(scattered_field(dens, target)[0] - ref) <= 1e-11 * abs(ref)
    # normal derivative of the total field on the boundary
    dpsi = (0.25j * k * hankel1(n, 3 * k) * (jvp(n, k) - jv(n, k) * h1vp(n, k) / hankel1(n, k))
            * np.exp(1j * np.outer(bnd.params - np.pi / 2, n))).sum(axis=1)
    assert np.linalg.norm(dens.values - dpsi) / np.linalg.norm(dpsi) <= 1e-11


@pytest.mark.parametrize("k", [2.0, 6.0])
def test_cfie_and_green_agree_on_star(star, k):
    bnd = sample(star, 1200)
    w = IncidentWave.from_angle(k, 1.1)
    a = scatter(bnd, w, 32, "cfie").values
    b = scatter(bnd, w, 32, "green").values
    assert np.linalg.norm(a - b) / np.linalg.norm(a) <= 1e-9


def test_reciprocity(star):
    k = 3.0
    bnd = sample(star, 800)
    a, b = 0.3, 2.2
    ua = far_field(solve_cfie(bnd, IncidentWave.from_angle(k, a)), [b]).values[0]
    ub = far_field(solve_cfie(bnd, IncidentWave.from_angle(k, b + np.pi)), [a + np.pi]).values[0]
    assert abs(ua - ub) <= 1e-11 * abs(ua)


def test_point_source_farfield_closed_form(star):
    # scattered field -G(., z) has far field -(e^{i pi/4}/sqrt(8 pi k)) e^{-i k xhat . z}
    k, z = 2.0, np.array([0.3, -0.2])
    bnd = sample(star, 800)
    dens = solve_cfie(bnd, rhs=-green(k, bnd.nodes, z), k=k, solver="dense")
    th = measurement_angles(16)
    xh = np.stack([np.cos(th), np.sin(th)], axis=1)
    ref = -np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k) * np.exp(-1j * k * xh @ z)
    np.testing.assert_allclose(far_field(dens, th).values, ref, rtol=1e-11)


def test_point_source_test_small(star):
    err, secs = point_source_test(star, 1.0, 400)
    assert err <= 1e-12 and secs > 0


def test_multiple_right_hand_sides(star):
    k = 2.0
    bnd = sample(star, 300)
    fac = factorize(assemble_layer("CFIE", k, bnd), "dense")
    waves = [IncidentWave.from_angle(k, a) for a in (0.0, 1.0)]
    rhs = np.stack([-w.values(bnd.nodes) for w in waves], axis=1)
    multi = solve_cfie(bnd, rhs=rhs, solver=fac, k=k).values
    one = solve_cfie(bnd, waves[1], solver=fac).values
    np.testing.assert_allclose(multi[:, 1], one, rtol=1e-14)


def test_hodlr_solver_matches_dense(star):
    k = 4.0
    bnd = sample(star, 1200)
    op = assemble_layer("CFIE", k, bnd)
    w = IncidentWave.from_angle(k, 0.0)
    d = solve_cfie(bnd, w, solver=factorize(op, "dense")).values
    h = solve_cfie(bnd, w, solver=factorize(op, "hodlr", eps=1e-10)).values
    assert np.linalg.norm(h - d) / np.linalg.norm(d) <= 1e-8
    fac = factorize(op, "hodlr")
    b = np.arange(1200.0)
    np.testing.assert_allclose(fac.solve_transpose(b), factorize(op, "dense").solve_transpose(b),
                               rtol=1e-7, atol=1e-9)


def test_farfield_roundtrip_exact(tmp_path):
    vals = np.exp(1j * np.linspace(0, 1, 5)) / 3
    ff = FarFieldData(1.5, (0.6, 0.8), measurement_angles(5), vals)
    ff.save(tmp_path / "f.json")
    back = FarFieldData.load(tmp_path / "f.json")
    assert np.array_equal(back.values, ff.values) and back.direction == ff.direction
    with pytest.raises(ValueError):
        FarFieldData.from_dict({"k": 1})


def test_input_validation(star):
    with pytest.raises(ValueError):
        IncidentWave(1.0, (1.0, 0.1))
    with pytest.raises(ValueError):
        IncidentWave(0.0, (1.0, 0.0))
    bnd = sample(star, 200)
    with pytest.raises(ValueError):
        factorize(assemble_layer("CFIE", 1.0, bnd), "magic")
    with pytest.raises(ValueError):
        scatter(bnd, IncidentWave(1.0, (1.0, 0.0)), 8, method="other")
    with pytest.raises(ValueError):
        solve_cfie(bnd)


def test_nonfinite_density_raises(star):
    bnd = sample(star, 200)
    fac = factorize(assemble_layer("CFIE", 1.0, bnd), "dense")
    with pytest.raises(SolverError):
        solve_cfie(bnd, rhs=np.full(200, np.nan), solver=fac, k=1.0)
