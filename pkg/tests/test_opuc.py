import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import iv, jv

from prmt import opuc
from prmt.errors import InvalidParams, SeriesNotConverged

SYM = opuc.LaurentSymbol.bessel(1.0)


def _circle(M=512):
    th = 2 * np.pi * np.arange(M) / M
    return np.exp(1j * th)


def test_bessel_symbol_data():
    assert SYM.coeff(0) == pytest.approx(iv(0, 2.0), rel=1e-14)
    assert SYM.coeff(-3) == pytest.approx(iv(3, 2.0), rel=1e-14)
    assert SYM.tail < 1e-16
    np.testing.assert_allclose(SYM.log_coeff([-1, 0, 1, 2]), [1, 0, 1, 0])
    np.testing.assert_allclose(SYM.psi_coeff([-2, 3]), jv([-2, 3], 2.0))
    assert SYM.psi_inv_coeff(3) == pytest.approx(-jv(3, 2.0), rel=1e-14)
    with pytest.raises(InvalidParams):
        opuc.LaurentSymbol.bessel(0.0)


def test_psi_times_psi_inverse_is_one():
    k = np.arange(-40, 41)
    conv = [np.sum(SYM.psi_coeff(k) * SYM.psi_inv_coeff(m - k)) for m in range(-3, 4)]
    np.testing.assert_allclose(conv, [0, 0, 0, 1, 0, 0, 0], atol=1e-15)


def test_toeplitz_small_cases():
    assert opuc.toeplitz_det(SYM, 0) == 1.0
    assert opuc.toeplitz_det(SYM, 1) == pytest.approx(iv(0, 2.0), rel=1e-14)
    with pytest.raises(InvalidParams):
        opuc.toeplitz_det(SYM, -1)


def test_toeplitz_det_extended_precision():
    mp.mp.dps = 40
    T = mp.matrix(6, 6)
    for i in range(6):
        for j in range(6):
            T[i, j] = mp.besseli(abs(i - j), 2)
    ref = complex(mp.det(T))
    assert opuc.toeplitz_det(SYM, 6) == pytest.approx(ref, rel=1e-12)


def test_toeplitz_det_positive():
    for n in range(0, 15):
        D = opuc.toeplitz_det(SYM, n)
        assert abs(D.imag) < 1e-12 * abs(D) and D.real > 0


def test_symbol_times_linear():
    same = opuc.symbol_times_linear(SYM, 0.0, "outer_root")
    np.testing.assert_allclose(same.coeff(np.arange(-5, 6)), SYM.coeff(np.arange(-5, 6)))
    one = opuc.LaurentSymbol(np.array([0, 1, 0], dtype=complex), 1)
    lin = opuc.symbol_times_linear(one, 0.5, "outer_root")
    np.testing.assert_allclose(lin.coeff([-1, 0, 1]), [-0.5, 1, 0])
    inner = opuc.symbol_times_linear(one, 0.5, "inner_root")
    np.testing.assert_allclose(inner.coeff([-1, 0, 1]), [0, 0.5, -1])
    with pytest.raises(InvalidParams):
        opuc.symbol_times_linear(SYM, 0.5, "sideways")


def test_double_outer_root_matches_convolution():
    z = 0.3 + 0.4j
    twice = opuc.symbol_times_linear(opuc.symbol_times_linear(SYM, z, "outer_root"), np.conj(z), "outer_root")
    k = np.arange(-8, 9)
    c = twice.coeff(k)
    direct = SYM.coeff(k) - (z + np.conj(z)) * SYM.coeff(k + 1) + abs(z) ** 2 * SYM.coeff(k + 2)
    np.testing.assert_allclose(c, direct, atol=1e-15)


def test_pi_one_closed_form():
    z = 0.7 - 0.2j
    assert opuc.pi_toeplitz(SYM, 1, z) == pytest.approx(z - iv(1, 2.0) / iv(0, 2.0), abs=1e-14)
    assert opuc.pi_star_toeplitz(SYM, 0, z) == 1.0


def test_star_transform_consistency():
    z = 0.4 + 0.1j
    star = opuc.pi_star_toeplitz(SYM, 3, z)
    plain = opuc.pi_toeplitz(SYM, 3, 1 / np.conj(z))
    assert star == pytest.approx(z**3 * np.conj(plain), abs=1e-12)


def test_orthogonality_trapezoid():
    b = _circle()
    phi = np.exp(2 * b.real)
    polys = [np.array([opuc.pi_toeplitz(SYM, n, zz) for zz in b]) for n in range(6)]
    for n in range(6):
        for m in range(n):
            assert abs(np.mean(polys[n] * np.conj(polys[m]) * phi)) <= 1e-10


def test_qr_vectors_match_contour_integrals():
    z, dim = 0.3, 12
    Q, R = opuc.qr_vectors(SYM, z, dim)
    np.testing.assert_allclose(Q, SYM.psi_inv_coeff(np.arange(1, dim + 1)), atol=0)
    b = _circle()
    psi = np.exp(b - 1 / b)
    ref = [np.mean(b ** (k + 1) * z / (b - z) * psi) for k in range(dim)]
    np.testing.assert_allclose(R, ref, atol=1e-12)
    _, R0 = opuc.qr_vectors(SYM, 0.0, dim)
    assert np.all(R0 == 0)


def test_uv_vectors_match_contour_integrals():
    z, dim = 1.6 - 0.5j, 12
    U, V = opuc.uv_vectors(SYM, z, dim)
    np.testing.assert_allclose(V, jv(-np.arange(dim) - 1, 2.0), atol=1e-15)
    a = _circle()
    ref = [np.mean(a ** (-j - 1) * a / (z - a) * np.exp(-(a - 1 / a))) for j in range(dim)]
    np.testing.assert_allclose(U, ref, atol=1e-12)


def test_series_cutoff():
    with pytest.raises(SeriesNotConverged):
        opuc.qr_vectors(SYM, 0.9995, 10)
    with pytest.raises(SeriesNotConverged):
        opuc.uv_vectors(SYM, 1.0005, 10)


@pytest.mark.parametrize("n", [1, 3, 5, 10])
def test_pi_star_operator_identity(n):
    z = 0.3 + 0.2j
    assert opuc.pi_star_operator(SYM, n, z) == pytest.approx(opuc.pi_star_toeplitz(SYM, n, z), abs=1e-10)


def test_pi_operator_identity():
    z = 1.5 * np.exp(0.7j)
    assert opuc.pi_operator(SYM, 5, z) == pytest.approx(opuc.pi_toeplitz(SYM, 5, z), abs=1e-10)


def test_pi_star_operator_large_n():
    z = 0.3 + 0.2j
    assert np.exp(z) * opuc.pi_star_operator(SYM, 40, z, 80) == pytest.approx(1.0, abs=1e-8)


@given(st.integers(0, 8), st.floats(0, 0.9), st.floats(0, 2 * math.pi))
def test_truncation_stability(n, r, th):
    z = r * np.exp(1j * th)
    a = opuc.pi_star_operator(SYM, n, z, 60)
    b = opuc.pi_star_operator(SYM, n, z, 90)
    assert abs(a - b) <= 1e-12


@given(st.integers(0, 8), st.floats(0, 0.9), st.floats(0, 2 * math.pi))
def test_sign_change_invariance(n, r, th):
    z = r * np.exp(1j * th)
    a = opuc.pi_star_operator(SYM, n, z)
    b = opuc.pi_star_operator(SYM, n, z, sign_flag=True)
    assert abs(a - b) <= 1e-13 * max(1.0, abs(a))


@given(st.complex_numbers(min_magnitude=0.2, max_magnitude=5.0))
def test_wiener_hopf_constant_invariance(c):
    z = -0.4 + 0.3j
    a = opuc.pi_star_operator(SYM, 4, z)
    b = opuc.pi_star_operator(SYM, 4, z, wh_constant=c)
    assert abs(a - b) <= 1e-13 * max(1.0, abs(a))


def test_operator_dimension_guard():
    with pytest.raises(InvalidParams):
        opuc.pi_star_operator(SYM, 55, 0.1, 60)


def test_truncation_certificate():
    op = opuc.truncated_operator(SYM, 60)
    assert op.tail < 1e-14
    assert op.AB.shape == (60, 60)


def test_gcbo_n1():
    lhs, rhs = opuc.gcbo_check(SYM, 1)
    assert lhs == pytest.approx(iv(0, 2.0) * math.exp(-1.0), rel=1e-14)
    assert abs(lhs - rhs) <= 1e-12


def test_gcbo_n8_two_dims():
    lhs, rhs60 = opuc.gcbo_check(SYM, 8, 60)
    _, rhs90 = opuc.gcbo_check(SYM, 8, 90)
    assert abs(lhs - rhs60) <= 1e-11 and abs(rhs60 - rhs90) <= 1e-13


def test_gcbo_large_n():
    lhs, rhs = opuc.gcbo_check(SYM, 40, 80)
    assert abs(lhs - 1) <= 1e-10 and abs(rhs - 1) <= 1e-10


def test_general_symbol_from_function():
    # same symbol through FFT data and a rescaled Wiener-Hopf factor
    gen = opuc.LaurentSymbol.from_function(lambda z: np.exp(z + 1 / z).real, K=40, wh_scale=2.5)
    k = np.arange(-10, 11)
    np.testing.assert_allclose(gen.coeff(k), SYM.coeff(k), atol=1e-14)
    np.testing.assert_allclose(gen.log_coeff([-1, 0, 1]), [1, 0, 1], atol=1e-14)
    z = 0.2 - 0.5j
    assert opuc.pi_star_operator(gen, 3, z) == pytest.approx(opuc.pi_star_toeplitz(SYM, 3, z), abs=1e-10)
    with pytest.raises(InvalidParams):
        opuc.LaurentSymbol.from_function(lambda z: z.real)


def test_non_bessel_symbol_identity():
    phi = lambda z: (1.2 + 0.5 * (z + 1 / z).real) * np.exp(0.3 * (z**2 + z**-2).real)
    sym = opuc.LaurentSymbol.from_function(phi, K=60)
    for n in (2, 6):
        z = 0.45 + 0.1j
        assert opuc.pi_star_operator(sym, n, z) == pytest.approx(opuc.pi_star_toeplitz(sym, n, z), abs=1e-10)
        lhs, rhs = opuc.gcbo_check(sym, n)
        assert abs(lhs - rhs) <= 1e-11


def test_scaling_probe_rejects_small_t():
    with pytest.raises(InvalidParams):
        opuc.scaling_probe(5.0, 0.0, 0.0)


@pytest.mark.slow
def test_scaling_probe_examples(table):
    lhs, ref = opuc.scaling_probe(100.0, 0.0, 0.5, table)
    assert abs(lhs - ref) <= 0.08
    lhs, _ = opuc.scaling_probe(200.0, 0.0, 0.0, table)
    assert abs(lhs - table.E_at(0.0)) <= 0.05
    errs = [abs(np.subtract(*opuc.scaling_probe(t, 0.0, -0.5, table))) for t in (50.0, 200.0)]
    assert errs[1] < errs[0]
