"""Scalar kernels shared by every other module.

Airy function values come from :func:`scipy.special.airy`; everything built on
top of them (the Airy kernel, the Cauchy-type transform ``C_w``, and the
``s``/``t`` families entering the generalized Tracy-Widom determinants) is
computed here.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special as _sp

from .errors import ConfluentParameters, InvalidParams, QuadratureNotConverged

DELTA_DIAG = 1e-6
DISTINCT_TOL = 1e-8

def airy_ai(u):
    """Airy function Ai(u); underflows cleanly to 0 for large positive u."""
    with np.errstate(over="ignore", invalid="ignore"):
        ai, _, _, _ = _sp.airy(u)
    return ai


def airy_ai_prime(u):
    with np.errstate(over="ignore", invalid="ignore"):
        _, aip, _, _ = _sp.airy(u)
    return aip


def airy_pair(u):
    """Return ``(Ai(u), Ai'(u))`` from a single evaluation."""
    with np.errstate(over="ignore", invalid="ignore"):
        ai, aip, _, _ = _sp.airy(u)
    return ai, aip


def airy_kernel(u, v):
    """Airy kernel ``(Ai(u)Ai'(v) - Ai'(u)Ai(v)) / (u - v)``.

    Within ``DELTA_DIAG`` of the diagonal the kernel is replaced by its
    diagonal value ``Ai'(m)^2 - m Ai(m)^2`` at the midpoint ``m``; the kernel is
    even in ``u - v`` about ``m`` so the switch costs only ``O((u-v)^2)``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    # Airy values on the un-broadcast inputs; outer-product calls stay O(n)
    au, apu = airy_pair(u)
    av, apv = airy_pair(v)
    d = u - v
    near = np.abs(d) <= DELTA_DIAG
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (au * apv - apu * av) / d
    if np.any(near):
        out = np.array(out, copy=True)
        m = (0.5 * (u + v) + np.zeros_like(d))[near]
        am, apm = airy_pair(m)
        out[near] = apm * apm - m * am * am
    return out[()] if out.ndim == 0 else out


# Composite Gauss-Legendre rule on [-1, 1] used for the contour integral.
_PANELS = 48


@lru_cache(maxsize=4)
def _panel_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-1.0, 1.0, _PANELS + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    nodes = (mid[:, None] + half * x[None, :]).ravel()
    weights = np.tile(w * half, _PANELS)
    return nodes, weights


def _contour_heights(u: np.ndarray, w: float) -> np.ndarray:
    # Saddle of a^3/3 + u a sits at a = i sqrt(u); keep the pole iw at
    # least 0.5 away from the horizontal contour.
    target = np.sqrt(np.maximum(u, 0.25))
    h = target.copy()
    near = np.abs(target - w) < 0.5
    if np.any(near):
        lo, hi = w - 0.5, w + 0.5
        use_lo = (lo >= 0.5) & (np.abs(lo - target) <= np.abs(hi - target))
        h[near] = np.where(use_lo[near], lo, hi)
    return h


def _cauchy_contour(u: np.ndarray, w: float, h: np.ndarray, order: int) -> np.ndarray:
    nodes, weights = _panel_rule(order)
    base = h**3 / 3.0 - u * h
    reach = np.sqrt(80.0 / h)
    rho = reach[:, None] * nodes[None, :]
    hh = h[:, None]
    phase = base[:, None] - hh * rho**2 + 1j * (rho**3 / 3.0 - hh**2 * rho + u[:, None] * rho)
    integrand = np.exp(phase) / (w - hh + 1j * rho)
    return (integrand @ weights).real * reach / (2.0 * np.pi)


def cauchy_airy(u, w: float, tol: float = 1e-11):
    """Cauchy-type Airy transform ``C_w(u)`` for real ``w``.

    The defining contour integral is taken along the horizontal line
    ``a = i h + rho``, ``rho`` real, with ``h`` at the saddle ``sqrt(u)`` when
    possible. On that line the integrand is a Gaussian in ``rho`` times a
    bounded oscillation. If the pole ``a = i w`` ends up below the line, its
    residue ``exp(w^3/3 - u w)`` is added back.

    Raises
    ------
    QuadratureNotConverged
        If two Gauss-Legendre orders on the same panels disagree by more than
        ``tol`` relative to ``max(1, |C_w(u)|)``.
    """
    if np.iscomplexobj(w):
        if np.imag(w) != 0:
            raise InvalidParams("cauchy_airy supports real w only")
        w = float(np.real(w))
    w = float(w)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    h = _contour_heights(u_arr, w)
    hi = _cauchy_contour(u_arr, w, h, 20)
    lo = _cauchy_contour(u_arr, w, h, 14)
    residue = np.where(h > w, np.exp(w**3 / 3.0 - u_arr * w), 0.0)
    value = hi + residue
    scale = np.maximum(1.0, np.abs(value))
    err = np.max(np.abs(hi - lo) / scale)
    if not np.isfinite(err) or err > tol:
        raise QuadratureNotConverged(f"C_w contour rule disagreement {err:.3g} at w={w}")
    return value[0] if np.ndim(u) == 0 else value.reshape(np.shape(u))


def partial_fraction_weights(ws) -> np.ndarray:
    """Weights ``c_j = prod_{l != j} 1/(w_l - w_j)`` of ``prod_j 1/(w_j + ia)``."""
    ws = np.asarray(ws, dtype=float)
    m = ws.size
    c = np.ones(m)
    for j in range(m):
        for l in range(m):
            if l != j:
                c[j] /= ws[l] - ws[j]
    return c


def min_separation(ws) -> float:
    ws = np.sort(np.asarray(ws, dtype=float))
    return float(np.min(np.diff(ws))) if ws.size > 1 else np.inf


def s_m(u, ws):
    """``s^(m)(u; w_1..w_m)`` as the partial-fraction sum of ``C_{w_j}``."""
    ws = np.atleast_1d(np.asarray(ws, dtype=float))
    if ws.size == 0:
        raise InvalidParams("s_m needs at least one parameter")
    if min_separation(ws) <= DISTINCT_TOL:
        raise ConfluentParameters(f"parameters closer than {DISTINCT_TOL}")
    c = partial_fraction_weights(ws)
    return sum(cj * cauchy_airy(u, wj) for cj, wj in zip(c, ws))


def _ray_integral(u: np.ndarray, ws: np.ndarray, order: int, reach: float) -> np.ndarray:
    # Ray a = i b0 + r e^{i pi/6}; the mirror ray contributes the conjugate.
    b0 = min(0.0, float(ws.min())) - 1.0
    nodes, weights = _panel_rule(order)
    r = 0.5 * reach * (nodes + 1.0)
    wts = 0.5 * reach * weights
    e = np.exp(1j * np.pi / 6)
    a = 1j * b0 + r * e
    g = np.exp(1j * (a[None, :] ** 3 / 3.0 + u[:, None] * a[None, :]))
    for wj in ws:
        g = g / (wj + 1j * a[None, :])
    return (g @ (wts * e)).real / np.pi


def s_m_contour(u, ws, tol: float = 1e-10):
    """``s^(m)`` straight from its contour integral; parameters may coincide.

    The contour is the pair of rays leaving ``i b0`` at angles ``pi/6`` and
    ``5 pi/6`` with ``b0 = min(0, min w) - 1`` below every pole. The integrand
    at the apex has size ``exp(b0^3/3 - u b0)``, so for large ``u`` the
    result carries an absolute error of about ``1e-16 exp(|b0| u)``;
    callers pair it with Airy-decaying weights.
    """
    ws = np.atleast_1d(np.asarray(ws, dtype=float))
    if ws.size == 0:
        raise InvalidParams("s_m_contour needs at least one parameter")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    b0 = min(0.0, float(ws.min())) - 1.0
    # past this radius the cubic term has beaten everything by e^{-40}
    reach = 6.0 + 2.0 * np.sqrt(np.max(np.abs(u_arr)) + b0 * b0)
    hi = _ray_integral(u_arr, ws, 20, reach)
    lo = _ray_integral(u_arr, ws, 14, reach)
    scale = np.maximum(1.0, np.abs(hi)) * np.exp(np.maximum(0.0, -b0 * u_arr))
    err = np.max(np.abs(hi - lo) / scale)
    if not np.isfinite(err) or err > tol:
        raise QuadratureNotConverged(f"ray rule disagreement {err:.3g}")
    return hi[0] if np.ndim(u) == 0 else hi.reshape(np.shape(u))


@lru_cache(maxsize=256)
def _t_polys(ws: tuple) -> tuple[Polynomial, Polynomial]:
    # Represent t = P(v) Ai(v) + Q(v) Ai'(v); D_v maps (P, Q) to
    # (P' + v Q, P + Q') because Ai'' = v Ai.
    v = Polynomial([0.0, 1.0])
    p, q = Polynomial([1.0]), Polynomial([0.0])
    for wj in ws:
        dp, dq = p.deriv() + v * q, p + q.deriv()
        p, q = wj * p - dp, wj * q - dq
    return p, q


def t_polynomials(ws) -> tuple[Polynomial, Polynomial]:
    """Polynomials ``(P, Q)`` with ``t^(m)(v) = P(v) Ai(v) + Q(v) Ai'(v)``."""
    return _t_polys(tuple(float(x) for x in np.atleast_1d(ws)))


def t_m(v, ws=()):
    """``t^(m)(v; w_1..w_{m-1}) = prod_j (w_j - D_v) Ai(v)``."""
    p, q = t_polynomials(ws)
    ai, aip = airy_pair(np.asarray(v, dtype=float))
    return p(v) * ai + q(v) * aip


def bessel_j(k: int, x):
    """Bessel J_k(x) for integer k (negative orders via reflection)."""
    return _sp.jv(int(k), x)


def bessel_i(k: int, x):
    """Modified Bessel I_k(x) for integer k."""
    return _sp.iv(abs(int(k)), x)
