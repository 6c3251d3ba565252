"""Nystrom discretization of the Airy operator on ``(x, inf)``.

All operator-side quantities live here: ``F_0`` as a Fredholm determinant,
``f(x, w)`` and ``g(x, w)`` through the resolvent, ``F_k`` from its
``k x k`` inner-product definition, and ``F_k`` from the Vandermonde-type
determinant of ``(w + D_x)^j f`` supplied by the Painleve module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import brentq

from . import painleve
from .errors import ConfluentParameters, InvalidParams, NotConverged, SingularSystem
from .special import airy_ai, airy_kernel, cauchy_airy, s_m, s_m_contour, t_m

DEFAULT_L = 16.0
DEFAULT_N = 96
DELTA_CONFLUENT = 1e-6
# Right end of the window is never placed before this point; Ai(12)^2 ~ 1e-22.
MIN_RIGHT_END = 12.0
# Required decay of C_w(u) Ai(u) at the right end of the window for w < 0.
LOG_TAIL = -45.0


@dataclass(frozen=True)
class Quadrature:
    x0: float
    length: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size


def build_quadrature(x0: float, L: float, n: int) -> Quadrature:
    """Gauss-Legendre rule with ``n`` points mapped to ``[x0, x0 + L]``."""
    if not (np.isfinite(x0) and np.isfinite(L)) or L <= 0 or int(n) != n or n < 1:
        raise InvalidParams("need finite x0, L > 0 and a positive integer n")
    s, w = np.polynomial.legendre.leggauss(int(n))
    nodes = x0 + 0.5 * L * (s + 1.0)
    return Quadrature(float(x0), float(L), nodes, 0.5 * L * w)


_settings = {"L": DEFAULT_L, "n": DEFAULT_N}


def configure(L: float | None = None, n: int | None = None) -> None:
    """Override the base window length and node count (process-wide)."""
    if L is not None:
        if not L > 0:
            raise InvalidParams("L must be positive")
        _settings["L"] = float(L)
    if n is not None:
        if int(n) != n or n < 4:
            raise InvalidParams("n must be an integer >= 4")
        _settings["n"] = int(n)


def default_window(x: float, w_min: float | None = None) -> tuple[float, int]:
    """Window length and node count for the half-line ``(x, inf)``.

    For ``w < 0`` the integrand ``C_w(u) Ai(u)`` behaves like
    ``exp(w^3/3 - u w - (2/3) u^{3/2})``, which peaks at ``u = w^2`` before
    decaying, so the window is stretched until that exponent reaches
    ``LOG_TAIL``.
    """
    base_L, base_n = _settings["L"], _settings["n"]
    right = max(x + base_L, MIN_RIGHT_END)
    if w_min is not None and w_min < 0:
        def expo(b):
            return w_min**3 / 3.0 - b * w_min - 2.0 / 3.0 * b**1.5 - LOG_TAIL
        start = w_min * w_min
        hi = start + 10.0
        while expo(hi) > 0:
            hi *= 2.0
        right = max(right, brentq(expo, start, hi))
    L = right - x
    return L, max(base_n, int(math.ceil(base_n / base_L * L)))


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """Symmetrized Nystrom matrix ``sqrt(w_i) A(x_i, x_j) sqrt(w_j)``."""

    quad: Quadrature
    matrix: np.ndarray
    _chol: tuple = field(repr=False)

    @cached_property
    def sqrt_w(self) -> np.ndarray:
        return np.sqrt(self.quad.weights)

    def log_det(self) -> float:
        """``log det(I - K)`` from the Cholesky factor."""
        return 2.0 * float(np.sum(np.log(np.diag(self._chol[0]))))


def build_operator(quad: Quadrature) -> DiscretizedOperator:
    """Assemble ``K`` and factor ``I - K``.

    A successful Cholesky factorization certifies that ``I - K`` is positive
    definite, i.e. every eigenvalue of the (positive semi-definite) ``K`` is
    below one.
    """
    sw = np.sqrt(quad.weights)
    k = airy_kernel(quad.nodes[:, None], quad.nodes[None, :]) * np.outer(sw, sw)
    k = 0.5 * (k + k.T)
    try:
        chol = cho_factor(np.eye(quad.n) - k, lower=True)
    except LinAlgError as exc:
        raise SingularSystem("I - K is not positive definite") from exc
    return DiscretizedOperator(quad, k, chol)


def operator_for(x: float, w_min: float | None = None, scale: int = 1) -> DiscretizedOperator:
    L, n = default_window(x, w_min)
    return build_operator(build_quadrature(x, L, scale * n))


def resolvent_apply(op: DiscretizedOperator, samples) -> np.ndarray:
    """Solve ``(I - A) y = samples`` at the quadrature nodes.

    The solve happens in symmetrized coordinates ``sqrt(w) y``; the result is
    mapped back. Raises :class:`SingularSystem` if the relative residual
    exceeds ``1e-12``.
    """
    g = np.asarray(samples, dtype=float)
    sw = op.sqrt_w
    rhs = sw[:, None] * g if g.ndim == 2 else sw * g
    z = cho_solve(op._chol, rhs)
    res = z - op.matrix @ z - rhs
    scale = max(np.max(np.abs(rhs)), np.finfo(float).tiny)
    if not np.all(np.isfinite(z)) or np.max(np.abs(res)) > 1e-12 * scale:
        raise SingularSystem("resolvent residual too large")
    return z / (sw[:, None] if g.ndim == 2 else sw)


def _f0_at(x: float, scale: int) -> float:
    return math.exp(operator_for(x, scale=scale).log_det())


def f0_fredholm(x: float, check: bool = True) -> float:
    """``F_0(x) = det(I - A_x)``; refinement-checked when ``check`` is set."""
    x = float(x)
    val = _f0_at(x, 1)
    if check:
        ref = _f0_at(x, 2)
        if abs(ref - val) > 1e-8:
            raise NotConverged(f"F_0({x}) changed by {abs(ref - val):.2e} on refinement")
    return val


def _f_and_g(x: float, w: float, scale: int = 1) -> tuple[float, float]:
    op = operator_for(x, min(w, 0.0), scale)
    nodes, wts = op.quad.nodes, op.quad.weights
    cw = cauchy_airy(nodes, w)
    y = resolvent_apply(op, cw)
    f = 1.0 - float(np.sum(wts * y * airy_ai(nodes)))
    g = -(float(cauchy_airy(x, w)) + float(np.sum(wts * airy_kernel(x, nodes) * y)))
    return f, g


def f_fredholm(x: float, w: float) -> float:
    """``f(x, w) = 1 - <(1 - A_x)^{-1} C_w, Ai>`` on ``(x, inf)``."""
    return _f_and_g(float(x), float(w))[0]


def g_fredholm(x: float, w: float) -> float:
    """``g(x, w) = -((1 - A_x)^{-1} C_w)(x)`` via the Nystrom extension."""
    return _f_and_g(float(x), float(w))[1]


def f_and_g_fredholm(x: float, w: float) -> tuple[float, float]:
    return _f_and_g(float(x), float(w))


@dataclass(frozen=True)
class SpikeVector:
    """Spike parameters with indices grouped into clusters closer than ``DELTA_CONFLUENT``."""

    ws: tuple
    clusters: tuple

    @classmethod
    def of(cls, ws, delta: float = DELTA_CONFLUENT) -> "SpikeVector":
        arr = np.atleast_1d(np.asarray(ws, dtype=float))
        if arr.size < 1 or arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise InvalidParams("need a non-empty 1-d array of finite spikes")
        order = np.argsort(arr, kind="stable")
        groups = [[int(order[0])]]
        for i in order[1:]:
            if arr[i] - arr[groups[-1][-1]] <= delta:
                groups[-1].append(int(i))
            else:
                groups.append([int(i)])
        return cls(tuple(float(v) for v in arr), tuple(tuple(g) for g in groups))

    @property
    def k(self) -> int:
        return len(self.ws)

    @property
    def distinct(self) -> bool:
        return all(len(c) == 1 for c in self.clusters)

    def representatives(self) -> list[tuple[float, int]]:
        """``(mean value, multiplicity)`` per cluster."""
        return [(float(np.mean([self.ws[i] for i in c])), len(c)) for c in self.clusters]


def _as_spikes(spikes) -> SpikeVector:
    return spikes if isinstance(spikes, SpikeVector) else SpikeVector.of(spikes)


def fk_definition(x: float, spikes, method: str = "partial_fraction") -> float:
    """``F_k`` from ``F_0 det(delta_mn - <(1-A_x)^{-1} s^(m), t^(n)>)``.

    ``method="partial_fraction"`` builds ``s^(m)`` from ``C_w`` and needs
    distinct spikes; ``method="contour"`` integrates ``s^(m)`` directly and
    accepts coinciding spikes (e.g. all zero).
    """
    sp = _as_spikes(spikes)
    if method not in ("partial_fraction", "contour"):
        raise InvalidParams(f"unknown method {method!r}")
    if method == "partial_fraction" and not sp.distinct:
        raise ConfluentParameters("fk_definition needs distinct spikes")
    if sp.k > 6:
        raise InvalidParams("at most 6 spikes")
    x = float(x)
    ws = np.array(sp.ws)
    op = operator_for(x, min(ws.min(), 0.0))
    nodes, wts = op.quad.nodes, op.quad.weights
    k = sp.k
    s_fn = s_m if method == "partial_fraction" else s_m_contour
    s = np.column_stack([s_fn(nodes, ws[: m + 1]) for m in range(k)])
    t = np.column_stack([t_m(nodes, ws[:n]) for n in range(k)])
    y = resolvent_apply(op, s)
    mat = np.eye(k) - y.T @ (wts[:, None] * t)
    return math.exp(op.log_det()) * float(np.linalg.det(mat))


def fk_determinant(x: float, spikes, table: painleve.PainleveTable | None = None) -> float:
    """``F_k`` from ``F_0 det((w_m + D_x)^{n-1} f(x, w_m)) / prod_{m<n}(w_n - w_m)``.

    Parameters within ``DELTA_CONFLUENT`` of each other are merged. A cluster
    of multiplicity ``c`` at ``w`` contributes the rows
    ``d^a/dw^a h(w) / a!`` for ``a < c`` in the numerator and the matching
    rows of the confluent Vandermonde matrix in the denominator, which is the
    l'Hospital limit of the distinct formula.
    """
    sp = _as_spikes(spikes)
    if sp.k > 6:
        raise InvalidParams("at most 6 spikes")
    tb = painleve._table(table)
    x = float(x)
    k = sp.k
    num = np.zeros((k, k))
    vdm = np.zeros((k, k))
    row = 0
    for w, mult in sp.representatives():
        d = painleve.wdx_w_derivatives(k - 1, mult - 1, x, w, tb)
        for a in range(mult):
            num[row] = d[a] / math.factorial(a)
            vdm[row] = [math.comb(j, a) * w ** (j - a) if j >= a else 0.0 for j in range(k)]
            row += 1
    f0 = float(painleve.f0_painleve(x, tb))
    return f0 * float(np.linalg.det(num) / np.linalg.det(vdm))


# Paper-table window for the moments.
MOMENT_GRID = (-12.0, 9.0, 0.05)


def cdf_on_grid(k: int, xs, table: painleve.PainleveTable | None = None) -> np.ndarray:
    """``F_k(x)`` with all spikes at zero, from the closed Painleve forms."""
    tb = painleve._table(table)
    if k == 0:
        return painleve.f0_painleve(xs, tb)
    return painleve.f123(xs, tb)[k - 1]


def moments(k: int, table: painleve.PainleveTable | None = None) -> tuple[float, float]:
    """Mean and standard deviation of ``F_k`` for ``k`` in 0..3.

    The CDF is sampled on ``[-12, 9]`` with step 0.05 and integrated through
    cubic splines, split at zero:
    ``mean = int_0 (1 - F) - int^0 F`` and
    ``E[X^2] = int_0 2x (1 - F) - int^0 2x F``.
    """
    if k not in (0, 1, 2, 3):
        raise InvalidParams("k must be 0..3")
    lo, hi, step = MOMENT_GRID
    xs = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    F = cdf_on_grid(k, xs, table)
    if F[0] > 1e-12 or 1.0 - F[-1] > 1e-6:
        raise NotConverged(f"F_{k} tails too heavy for the moment window")
    neg, pos = xs <= 0, xs >= 0
    xn, xp = xs[neg], xs[pos]
    Fn, Fp = F[neg], F[pos]
    m1 = CubicSpline(xp, 1 - Fp).integrate(0, hi) - CubicSpline(xn, Fn).integrate(lo, 0)
    m2 = (CubicSpline(xp, 2 * xp * (1 - Fp)).integrate(0, hi)
          - CubicSpline(xn, 2 * xn * Fn).integrate(lo, 0))
    return float(m1), float(math.sqrt(m2 - m1 * m1))


DISTRIBUTIONS = ("f0", "f1", "f2", "f3", "fk")


def tabulate_cdf(dist: str, xs, ws=(), route: str = "painleve",
                 table: painleve.PainleveTable | None = None) -> np.ndarray:
    """CDF values of ``dist`` on ``xs`` by one route.

    ``f1``..``f3`` have all spikes at zero; ``fk`` takes ``ws``. The
    ``"fredholm"`` route uses the operator definitions (the contour form of
    ``s^(m)`` whenever spikes coincide), ``"painleve"`` the closed forms and
    the Lax-pair determinant.
    """
    if dist not in DISTRIBUTIONS:
        raise InvalidParams(f"unknown distribution {dist!r}")
    if route not in ("fredholm", "painleve"):
        raise InvalidParams(f"unknown route {route!r}")
    xs = np.asarray(xs, dtype=float)
    if dist == "fk":
        spikes = SpikeVector.of(ws)
    elif dist != "f0":
        spikes = SpikeVector.of([0.0] * int(dist[1]))
    if route == "painleve":
        tb = painleve._table(table)
        if dist == "f0":
            return np.asarray(painleve.f0_painleve(xs, tb), dtype=float)
        if dist != "fk":
            return np.asarray(painleve.f123(xs, tb)[int(dist[1]) - 1], dtype=float)
        return np.array([fk_determinant(x, spikes, tb) for x in xs])
    if dist == "f0":
        return np.array([f0_fredholm(x) for x in xs])
    method = "partial_fraction" if spikes.distinct else "contour"
    return np.array([fk_definition(x, spikes, method) for x in xs])
