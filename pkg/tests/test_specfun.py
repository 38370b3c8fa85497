import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helio2d import _backend
from helio2d.specfun import DomainError, bessel_j0j1y0y1, green, green_grad, hankel01

mpmath.mp.dps = 40


def _oracle(x):
    return [float(f(n, x)) for f, n in ((mpmath.besselj, 0), (mpmath.besselj, 1),
                                         (mpmath.bessely, 0), (mpmath.bessely, 1))]


GRID = np.logspace(-6, 4, 400)


@pytest.fixture(scope="module")
def oracle_grid():
    return np.array([_oracle(x) for x in GRID])


@pytest.mark.parametrize("backend", ["cython", "python"])
def test_hankel_scaled_accuracy_on_log_grid(oracle_grid, backend):
    mod = _backend.load(backend)
    j0, j1, y0, y1 = mod.bessel01(GRID)
    ref = oracle_grid
    for got, (a, b) in (((j0, y0), (0, 2)), ((j1, y1), (1, 3))):
        scale = np.hypot(ref[:, a], ref[:, b])
        assert np.max(np.abs(got[0] - ref[:, a]) / scale) <= 1e-13
        assert np.max(np.abs(got[1] - ref[:, b]) / scale) <= 1e-13


def test_componentwise_relative_away_from_zeros(oracle_grid):
    vals = np.array(bessel_j0j1y0y1(GRID)).T
    ref = oracle_grid
    scale = np.hypot(ref[:, [0, 1, 0, 1]], ref[:, [2, 3, 2, 3]])
    mask = np.abs(ref) > 0.05 * scale
    rel = np.abs(vals - ref)[mask] / np.abs(ref[mask])
    assert rel.max() <= 1e-13


def test_reference_values_at_one():
    j0, _, y0, _ = bessel_j0j1y0y1(1.0)
    assert j0 == pytest.approx(0.7651976865579666, rel=1e-15, abs=0)
    assert y0 == pytest.approx(0.08825696421567696, rel=1e-13, abs=0)


def test_small_argument_limit():
    j0, j1, _, _ = bessel_j0j1y0y1(1e-9)
    assert j0 == pytest.approx(1.0, abs=1e-15)
    assert j1 == pytest.approx(5e-10, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, np.nan, np.inf])
def test_domain_errors(x):
    with pytest.raises(DomainError):
        bessel_j0j1y0y1(x)


def test_backends_agree():
    x = np.logspace(-5, 4, 2000)
    a = np.array(_backend.load("cython").bessel01(x))
    b = np.array(_backend.load("python").bessel01(x))
    scale = np.hypot(a[[0, 1, 0, 1]], a[[2, 3, 2, 3]])
    assert np.max(np.abs(a - b) / scale) <= 1e-14


def test_no_common_zeros():
    x = np.linspace(1e-3, 200, 100001)
    j0, _, y0, _ = bessel_j0j1y0y1(x)
    assert np.all(j0 ** 2 + y0 ** 2 > 0)


def test_green_value_at_unit_distance():
    g = green(1.0, [0.0, 0.0], [1.0, 0.0])
    assert g.real == pytest.approx(-0.02206424, abs=1e-8)
    assert g.imag == pytest.approx(0.19129942, abs=1e-8)


def test_green_singular_point_rejected():
    with pytest.raises(DomainError):
        green(1.0, [0.3, 0.2], [0.3, 0.2])
    with pytest.raises(DomainError):
        green_grad(1.0, [0.3, 0.2], [0.3, 0.2])


def test_green_imag_limit():
    g = green(2.0, [0.0, 0.0], [1e-8, 0.0])
    assert g.imag == pytest.approx(0.25, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 50), st.tuples(*[st.floats(-3, 3)] * 4))
def test_green_symmetric(k, pts):
    x, y = np.array(pts[:2]), np.array(pts[2:])
    if np.hypot(*(x - y)) < 1e-3:
        return
    assert green(k, x, y) == green(k, y, x)
    np.testing.assert_allclose(green_grad(k, x, y), -green_grad(k, y, x), rtol=1e-14)


def test_green_grad_matches_hankel_formula():
    k = 2.0
    _, h1 = hankel01(k)
    grad = green_grad(k, [0.0, 0.0], [1.0, 0.0])
    np.testing.assert_allclose(grad, [-0.25j * k * h1, 0.0], rtol=1e-14, atol=1e-16)


def test_green_grad_central_difference():
    k, h = 3.0, 1e-5
    x, y = np.array([0.2, -0.4]), np.array([1.1, 0.7])
    nu = np.array([0.6, 0.8])
    fd = (green(k, x, y + h * nu) - green(k, x, y - h * nu)) / (2 * h)
    assert abs(fd - green_grad(k, x, y) @ nu) <= 1e-9


def test_green_solves_helmholtz():
    k, h = 2.5, 1e-3
    x, y = np.array([0.0, 0.0]), np.array([0.9, 0.4])
    shifts = [(h, 0), (-h, 0), (0, h), (0, -h)]
    lap = (sum(green(k, x, y + np.array(s)) for s in shifts) - 4 * green(k, x, y)) / h ** 2
    assert abs(lap + k ** 2 * green(k, x, y)) <= 1e-5
