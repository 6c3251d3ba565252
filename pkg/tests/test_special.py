import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from prmt import special as S
from prmt.errors import ConfluentParameters, InvalidParams

mp.mp.dps = 30


def _quad_cauchy(u, w):
    if w > 0:
        # C_w(u) = int_{-inf}^u exp(-w (u - s)) Ai(s) ds
        val, _ = quad(lambda s: math.exp(-w * (u - s)) * S.airy_ai(s), u - 40.0 / w, u,
                      limit=2000, epsabs=1e-15, epsrel=1e-13)
        return val
    # C_w(u) = exp(w^3/3 - u w) - int_u^inf exp(w (s - u)) Ai(s) ds
    val, _ = quad(lambda s: math.exp(w * (s - u)) * S.airy_ai(s), u, u + 40,
                  limit=400, epsabs=1e-14, epsrel=1e-13)
    return math.exp(w**3 / 3 - u * w) - val


@pytest.mark.parametrize("u", [-10.0, -3.3, -0.5, 0.0, 0.7, 2.0, 5.5, 10.0])
def test_airy_matches_mpmath(u):
    ai, aip = S.airy_pair(u)
    ref = float(mp.airyai(u))
    refp = float(mp.airyai(u, derivative=1))
    assert ai == pytest.approx(ref, rel=1e-12, abs=1e-15)
    assert aip == pytest.approx(refp, rel=1e-12, abs=1e-15)


def test_airy_large_argument_underflows():
    assert S.airy_ai(200.0) == 0.0
    assert np.isfinite(S.airy_ai_prime(200.0))


def test_airy_kernel_diagonal_value():
    m = 0.3
    ai, aip = S.airy_pair(m)
    assert S.airy_kernel(m, m) == pytest.approx(aip**2 - m * ai**2, rel=1e-14)


@pytest.mark.parametrize("d", [0.9e-6, 1.5e-6, 1e-3])
def test_airy_kernel_both_branches_match_mpmath(d):
    u, v = mp.mpf("1.1"), mp.mpf("1.1") + mp.mpf(d)
    ref = (mp.airyai(u) * mp.airyai(v, 1) - mp.airyai(u, 1) * mp.airyai(v)) / (u - v)
    assert S.airy_kernel(1.1, 1.1 + d) == pytest.approx(float(ref), abs=1e-10)


def test_airy_kernel_outer_product_shape():
    x = np.linspace(-2, 3, 7)
    K = S.airy_kernel(x[:, None], x[None, :])
    assert K.shape == (7, 7)
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(K) > -1e-12)


@given(st.floats(-8, 8), st.floats(-8, 8))
def test_airy_kernel_symmetric(u, v):
    assert S.airy_kernel(u, v) == pytest.approx(S.airy_kernel(v, u), rel=1e-12, abs=1e-15)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("w", [-4.0, -1.5, -0.3, 0.0, 0.4, 1.0, 2.5, 4.0])
def test_cauchy_airy_matches_quadrature(w):
    us = np.array([-8.0, -5.0, -1.0, 0.0, 0.5, 2.0, 5.0, 10.0])
    got = S.cauchy_airy(us, w)
    ref = np.array([_quad_cauchy(u, w) for u in us])
    assert np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref))) < 1e-9


def test_cauchy_airy_rejects_complex():
    with pytest.raises(InvalidParams):
        S.cauchy_airy(0.0, 1.0 + 0.5j)


@given(st.floats(-6, 8), st.floats(-3, 3))
def test_cauchy_airy_first_order_equation(u, w):
    # d/du C_w = -w C_w + Ai
    h = 1e-4
    d = (S.cauchy_airy(u + h, w) - S.cauchy_airy(u - h, w)) / (2 * h)
    rhs = -w * S.cauchy_airy(u, w) + S.airy_ai(u)
    assert d == pytest.approx(rhs, abs=1e-6 * max(1.0, abs(rhs)))


def test_partial_fraction_weights_two_points():
    c = S.partial_fraction_weights([0.5, -0.5])
    np.testing.assert_allclose(c, [-1.0, 1.0])


def test_s_m_single_is_cauchy():
    u = np.linspace(-3, 5, 9)
    np.testing.assert_allclose(S.s_m(u, [0.7]), S.cauchy_airy(u, 0.7), rtol=0, atol=0)


def test_s_m_confluent_raises():
    with pytest.raises(ConfluentParameters):
        S.s_m(0.0, [0.3, 0.3 + 1e-9])
    with pytest.raises(InvalidParams):
        S.s_m(0.0, [])


@pytest.mark.parametrize("ws", [[0.5], [-1.2], [0.3, -0.7], [0.9, -0.2, 0.4], [3.5]])
def test_s_m_contour_matches_partial_fractions(ws):
    u = np.linspace(-8, 6, 29)
    a = S.s_m_contour(u, ws)
    b = S.s_m(u, ws)
    assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))) < 1e-8


def test_s_m_contour_repeated_zero():
    u = np.linspace(-4, 4, 17)
    c0 = S.cauchy_airy(u, 0.0)
    np.testing.assert_allclose(S.s_m_contour(u, [0.0]), c0, atol=1e-12)
    # 1/(ia)^2 integrates to u C_0(u) - Ai'(u)
    np.testing.assert_allclose(S.s_m_contour(u, [0.0, 0.0]), u * c0 - S.airy_ai_prime(u), atol=1e-11)
    assert S.s_m_contour(0.0, [0.0, 0.0]) == pytest.approx(-S.airy_ai_prime(0.0), abs=1e-13)


def test_s_m_contour_limit_of_distinct():
    u = np.linspace(-3, 3, 7)
    d = 1e-3
    # symmetric split: error O(d^2)
    np.testing.assert_allclose(S.s_m_contour(u, [0.2, 0.2]), S.s_m(u, [0.2 - d, 0.2 + d]), atol=1e-5)


def test_t_m_low_orders():
    v = np.linspace(-4, 4, 11)
    ai, aip = S.airy_pair(v)
    np.testing.assert_allclose(S.t_m(v), ai)
    np.testing.assert_allclose(S.t_m(v, [0.6]), 0.6 * ai - aip, atol=1e-15)
    # (w2 - D)(w1 - D) Ai = w1 w2 Ai - (w1 + w2) Ai' + v Ai
    np.testing.assert_allclose(S.t_m(v, [0.6, -0.2]), -0.12 * ai - 0.4 * aip + v * ai, atol=1e-14)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=3), st.floats(-3, 3))
def test_t_m_matches_mpmath_derivatives(ws, v):
    # prod (w_j - D) Ai evaluated with mpmath derivatives of Ai
    poly = [mp.mpf(1)]
    for w in ws:
        new = [mp.mpf(0)] * (len(poly) + 1)
        for k, c in enumerate(poly):
            new[k] += w * c
            new[k + 1] -= c
        poly = new
    ref = sum(c * mp.diff(mp.airyai, v, k) for k, c in enumerate(poly))
    assert S.t_m(v, ws) == pytest.approx(float(ref), abs=1e-12)


@pytest.mark.parametrize("k", [-3, 0, 2, 7])
def test_bessel_matches_mpmath(k):
    for x in (0.5, 2.0, 11.0):
        assert S.bessel_j(k, x) == pytest.approx(float(mp.besselj(k, x)), rel=1e-12, abs=1e-15)
        assert S.bessel_i(k, x) == pytest.approx(float(mp.besseli(k, x)), rel=1e-12)


def test_bessel_j_reflection():
    assert S.bessel_j(-5, 1.3) == pytest.approx(-S.bessel_j(5, 1.3), rel=1e-14)
