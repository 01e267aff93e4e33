import numpy as np
import pytest
from hypothesis import given, strategies as st

from relmoments import harmonics

grid = np.meshgrid(np.linspace(-0.95, 0.95, 10), np.linspace(0, 2 * np.pi, 10, endpoint=False))


def _quadrature(L):
    x, w = np.polynomial.legendre.leggauss(L + 4)
    nphi = 2 * L + 8
    ph = np.arange(nphi) * 2 * np.pi / nphi
    Y = harmonics.all_Y(L, x[:, None], ph[None, :]).reshape((L + 1) * (2 * L + 1), -1)
    wt = (w[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]).ravel()
    return Y, wt


def test_orthogonality_and_normalization():
    L = 8
    Y, wt = _quadrature(L)
    G = (Y * wt) @ Y.T
    expected = np.zeros_like(G)
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            i = ell * (2 * L + 1) + m + L
            expected[i, i] = 4 * np.pi / (2 * ell + 1)
    np.testing.assert_allclose(G, expected, atol=1e-12)


def test_low_order_explicit():
    y, phi = 0.3, 0.7
    s = np.sqrt(1 - y * y)
    assert harmonics.eval_Y(0, 0, y, phi) == pytest.approx(1.0)
    assert harmonics.eval_Y(1, 0, y, phi) == pytest.approx(y)
    assert abs(harmonics.eval_Y(1, 1, y, phi)) == pytest.approx(s * np.cos(phi))
    assert abs(harmonics.eval_Y(1, -1, y, phi)) == pytest.approx(s * np.sin(phi))


@pytest.mark.parametrize("ell", range(9))
def test_all_identities_on_grid(ell):
    y, phi = grid
    for m in range(-ell, ell + 1):
        res = {**harmonics.verify_recurrences(ell, m, y, phi), **harmonics.verify_derivatives(ell, m, y, phi)}
        assert max(res.values()) < 1e-10, (ell, m, res)


@given(st.integers(0, 6), st.floats(-0.9, 0.9), st.floats(0, 2 * np.pi))
def test_dy_derivative_matches_differences(ell, y, phi):
    h = 1e-6
    d = harmonics.all_dY_dy(ell, y, phi)
    fd = (harmonics.all_Y(ell, y + h, phi) - harmonics.all_Y(ell, y - h, phi)) / (2 * h)
    np.testing.assert_allclose(d, fd, atol=1e-6)


def test_derivative_identities_with_numerical_derivative():
    y, phi = grid
    h = 1e-6
    for ell in range(1, 6):
        for m in range(-ell, ell + 1):
            fd = (harmonics.eval_Y(ell, m, y + h, phi) - harmonics.eval_Y(ell, m, y - h, phi)) / (2 * h)
            res = harmonics.verify_derivatives(ell, m, y, phi, dY=fd)
            assert max(res.values()) < 1e-6


def test_multiplication_tables_reproduce_products():
    L = 5
    up, down = harmonics.multiplication_tables(L)
    y, phi = 0.37, 1.1
    Y = harmonics.all_Y(L + 1, y, phi)
    s = np.sqrt(1 - y * y)
    cosines = (s * np.cos(phi), s * np.sin(phi), y)
    for c in range(3):
        for ell in range(L + 1):
            for m in range(-ell, ell + 1):
                val = 0.0
                for j in range(2 * L + 3):
                    mp = j - L - 1
                    if up[c, ell, m + L, j] and abs(mp) <= ell + 1:
                        val += up[c, ell, m + L, j] * Y[ell + 1, mp + L + 1]
                    if down[c, ell, m + L, j] and abs(mp) <= ell - 1:
                        val += down[c, ell, m + L, j] * Y[ell - 1, mp + L + 1]
                assert val == pytest.approx(cosines[c] * Y[ell, m + L + 1], abs=1e-13)


def test_sign_factor_table():
    s = [harmonics.sign_s(m) for m in (-2, -1, 0, 1, 2)]
    np.testing.assert_allclose(s, [-1, -np.sqrt(2), np.sqrt(2), 1, 1])
    assert [harmonics.sign_stilde(m) for m in (-2, -1, 0, 1, 2)] == [-1, -1, 0, 0, 1]
    np.testing.assert_allclose([harmonics.sign_shat(m) for m in (-2, -1, 0, 1, 2)], [-1, 0, np.sqrt(2), 1, 1])
    np.testing.assert_allclose([harmonics.sign_scheck(m) for m in (-2, -1, 0, 1, 2)], [-1, -1, 0, np.sqrt(2), 1])


def test_coefficient_functions():
    assert harmonics.h(3, 1) == pytest.approx(np.sqrt(8))
    assert harmonics.h(2, 2) == 0.0
    assert harmonics.htilde(2, 1) == pytest.approx(np.sqrt(12))
    assert harmonics.hhat(3, 2) == pytest.approx(np.sqrt(10))
