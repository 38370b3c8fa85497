import numpy as np
import pytest

from helio2d.curve import sample
from helio2d.hodlr import HodlrError, aca, compress, from_dense
from helio2d.potentials import assemble_layer


def smooth_kernel(n, rng):
    x = np.sort(rng.uniform(0, 1, n))
    a = 1.0 / (1.0 + np.abs(x[:, None] - x[None, :]) * 10) + 0j
    return a + n * np.eye(n)


def test_diagonal_has_rank_zero():
    a = np.diag(np.arange(1.0, 301.0))
    h = from_dense(a, leaf_size=32)
    assert set(h.rank_stats().values()) == {0}
    b = np.ones(300)
    np.testing.assert_allclose(h.factorize().solve(b), b / np.arange(1.0, 301.0), rtol=1e-14)


def test_rank_one_plus_identity():
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal(256), rng.standard_normal(256)
    a = np.eye(256) + np.outer(u, v) / 256
    h = from_dense(a, leaf_size=32)
    assert max(h.rank_stats().values()) == 1
    b = rng.standard_normal(256)
    np.testing.assert_allclose(h.factorize().solve(b), np.linalg.solve(a, b), rtol=1e-10)


def test_matvec_solve_and_transpose(rng):
    a = smooth_kernel(700, rng)
    h = from_dense(a, leaf_size=50, eps=1e-12)
    x = rng.standard_normal(700) + 1j * rng.standard_normal(700)
    assert np.linalg.norm(h.matvec(x) - a @ x) <= 1e-10 * np.linalg.norm(a @ x)
    h.factorize()
    np.testing.assert_allclose(h.solve(a @ x), x, rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(h.solve_transpose(a.T @ x), x, rtol=1e-9, atol=1e-10)
    assert h.memory() < a.size


def test_cfie_compression_accuracy(star):
    op = assemble_layer("CFIE", 4.0, sample(star, 1440))
    a = op.dense()
    h = compress(op.entries, op.n, leaf_size=128, eps=1e-10).factorize()
    b = np.ones(op.n, dtype=complex)
    x = h.solve(b)
    assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-9


def test_aca_recovers_low_rank(rng):
    u = rng.standard_normal((80, 3))
    v = rng.standard_normal((3, 90))
    a = u @ v
    U, V, full = aca(lambda r, c: a[np.ix_(r, c)], np.arange(80), np.arange(90), 1e-12, rng)
    assert not full
    assert np.linalg.norm(U @ V.T - a) <= 1e-10 * np.linalg.norm(a)


def test_full_rank_block_warns(rng):
    a = rng.standard_normal((64, 64)) + 10 * np.eye(64)
    with pytest.warns(RuntimeWarning):
        h = from_dense(a, leaf_size=16, eps=1e-12)
    b = rng.standard_normal(64)
    np.testing.assert_allclose(h.factorize().solve(b), np.linalg.solve(a, b), rtol=1e-9)


def test_parameter_validation():
    a = np.eye(10)
    with pytest.raises(ValueError):
        from_dense(a, eps=1e-3)
    with pytest.raises(ValueError):
        from_dense(a, eps=1e-16)
    with pytest.raises(ValueError):
        compress(lambda r, c: a[np.ix_(r, c)], 10, leaf_size=0)


def test_solve_requires_factorization():
    h = from_dense(np.eye(300), leaf_size=32)
    with pytest.raises(HodlrError):
        h.solve(np.ones(300))
