import json

import numpy as np
import pytest

from helio2d.curve import ClosedCurve, hausdorff, is_simple, perturb, sample
from helio2d.forward import FarFieldData, IncidentWave, scatter
from helio2d.inverse import (Linearization, NewtonControls, PerturbationBasis, StepFailure,
                             StepReport, build_system, derivative_matrix, frechet_apply,
                             newton_step, residual_norm, run_newton, solve_least_squares,
                             step_norm)
from helio2d.potentials import measurement_angles

N = 600


def farfields(curve, waves, angles):
    bnd = sample(curve, N)
    return np.stack([scatter(bnd, w, angles.size).values for w in waves], axis=1)


@pytest.fixture(scope="module")
def setup():
    star = ClosedCurve.star(n=256)
    k = 2.0
    waves = [IncidentWave.from_angle(k, a) for a in (0.0, np.pi / 2)]
    angles = measurement_angles(32)
    lin = Linearization.build(sample(star, N), waves, angles, "dense")
    return star, waves, angles, lin


def test_predicted_matches_cfie_forward(setup):
    star, waves, angles, lin = setup
    ref = farfields(star, waves, angles)
    assert np.linalg.norm(lin.predicted - ref) / np.linalg.norm(ref) <= 1e-10


def test_frechet_finite_difference(setup):
    star, waves, angles, lin = setup
    rng = np.random.default_rng(7)
    basis = PerturbationBasis(9)
    f0 = lin.predicted
    for _ in range(3):
        c = rng.standard_normal(9) / 9
        lin_pred = frechet_apply(lin, basis.evaluate(c, lin.boundary.params))
        errs = []
        for h in (1e-3, 5e-4):
            fd = (farfields(perturb(star, c, h), waves, angles) - f0) / h
            errs.append(np.linalg.norm(fd - lin_pred) / np.linalg.norm(lin_pred))
        assert errs[1] <= 1e-2
        assert 1.6 <= errs[0] / errs[1] <= 2.4     # first order in h


def test_routes_agree(setup):
    _, _, _, lin = setup
    basis = PerturbationBasis(7)
    a = derivative_matrix(lin, basis, "direct")
    b = derivative_matrix(lin, basis, "transpose")
    assert a.shape == (64, 7)
    assert np.linalg.norm(a - b) <= 1e-11 * np.linalg.norm(a)
    with pytest.raises(ValueError):
        derivative_matrix(lin, basis, "sideways")


def test_derivative_columns_match_frechet_apply(setup):
    _, _, _, lin = setup
    basis = PerturbationBasis(5)
    fp = derivative_matrix(lin, basis)
    e = np.zeros(5)
    e[3] = 1.0
    col = frechet_apply(lin, basis.evaluate(e, lin.boundary.params))
    np.testing.assert_allclose(fp[:, 3], col.T.reshape(-1), rtol=1e-10, atol=1e-13)


def test_build_system_rejects_mismatched_records(setup):
    _, waves, angles, lin = setup
    basis = PerturbationBasis(5)
    bad = [FarFieldData(3.0, w.d, angles, np.zeros(32)) for w in waves]
    with pytest.raises(ValueError):
        build_system(lin, bad, basis)
    with pytest.raises(ValueError):
        build_system(lin, np.zeros((31, 2)), basis)
    with pytest.raises(ValueError):
        build_system(lin, lin.predicted, PerturbationBasis(200))


def test_least_squares_exact_when_consistent(setup):
    _, _, _, lin = setup
    basis = PerturbationBasis(5)
    target = np.array([0.1, -0.05, 0.02, 0.0, 0.03])
    fp = derivative_matrix(lin, basis)
    system = build_system(lin, lin.predicted + (fp @ target).reshape(2, -1).T, basis)
    np.testing.assert_allclose(solve_least_squares(system), target, atol=1e-10)
    assert system.residual > 0 and np.isfinite(system.condition)


def test_circle_radius_recovered():
    k = 1.0
    waves = [IncidentWave.from_angle(k, 0.0)]
    angles = measurement_angles(16)
    meas = farfields(ClosedCurve.circle(1.2), waves, angles)
    meas_rec = [FarFieldData(k, waves[0].d, angles, meas[:, 0])]
    ctl = NewtonControls(rho=1.0, residual_tol=1e-8, min_step_tol=1e-10, max_iters=15, nb=20)
    res = run_newton(ClosedCurve.circle(1.0), waves, meas_rec, ctl, PerturbationBasis(1), 200,
                     angles, "dense")
    assert res.status == "converged"
    assert hausdorff(res.curve, ClosedCurve.circle(1.2)) <= 1e-6
    assert res.history[0].iter == 0 and res.iterations == len(res.history) - 1


def test_newton_step_backtracks_to_simple_curve():
    circle = ClosedCurve.circle(1.0, n=128)
    # an inward step of 3 would turn the unit circle inside out
    ctl = NewtonControls(rho=1.0, lam=0.5, nb=10)

    class Fake:
        design = np.eye(3)
        rhs = np.array([-3.0, 0.0, 0.0])
    new, p, l, src = newton_step(circle, Fake, ctl, 3, 128, p=np.array([-3.0, 0.0, 0.0]))
    assert l >= 2 and is_simple(new)
    with pytest.raises(StepFailure):
        newton_step(circle, Fake, NewtonControls(rho=1.0, max_backtracks=0, nb=10), 3, 128,
                    p=np.array([-3.0, 0.0, 0.0]))


def test_step_norm_is_rms():
    basis = PerturbationBasis(3)
    assert step_norm(basis, [0.5, 0, 0]) == pytest.approx(0.5)
    assert step_norm(basis, [0, 1.0, 0]) == pytest.approx(np.sqrt(0.5))


def test_basis_and_controls_validation():
    assert PerturbationBasis(6).max_frequency == 3
    with pytest.raises(ValueError):
        PerturbationBasis(0)
    with pytest.raises(ValueError):
        NewtonControls(lam=1.5)
    assert residual_norm(np.ones(4), 4) == pytest.approx(2 * np.sqrt(np.pi / 2))
    rep = StepReport(1, 0.5, 0.1, 2)
    assert json.loads(rep.to_json()) == {"iter": 1, "residual": 0.5, "step_norm": 0.1,
                                         "backtracks": 2}
