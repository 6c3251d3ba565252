"""Identity-verification suites.

Each suite returns a list of :class:`Check` records; a suite passes when all
of its checks do. Sub-checks are named ``suite.part``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import fredholm, opuc, painleve
from .models import make_rng
from .special import airy_ai, min_separation

THM11_TOL = 1e-6
THM12_TOL = 1e-6
OPUC_TOL = 1e-10
GCBO_TOL = 1e-11
SCALING_TOL = 0.05
# Random spike vectors closer than this are redrawn: the partial-fraction
# form of s^(m) loses about log10(1/sep^(k-1)) digits to cancellation.
THM11_MIN_SEP = 0.05


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    max_err: float
    tol: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.max_err:.3e}"


def _check(name, errs, tol) -> Check:
    err = float(np.max(np.abs(errs)))
    return Check(name, bool(np.isfinite(err) and err <= tol), err, tol)


def summary(suite: str, checks: list[Check]) -> Check:
    err = max(c.max_err for c in checks)
    return Check(suite, all(c.passed for c in checks), err, float("nan"))


def thm11(trials: int = 20, seed: int = 7, table=None) -> list[Check]:
    """Definition vs determinant formula for random distinct spikes in [-1, 1]^k."""
    rng = make_rng(seed)
    tb = painleve._table(table)
    out = []
    for k in (1, 2, 3):
        errs = []
        for _ in range(trials):
            ws = rng.uniform(-1.0, 1.0, k)
            while min_separation(ws) < THM11_MIN_SEP:
                ws = rng.uniform(-1.0, 1.0, k)
            for x in (-1.0, 0.0, 1.0):
                errs.append(fredholm.fk_definition(x, ws) - fredholm.fk_determinant(x, ws, tb))
        out.append(_check(f"thm11.k{k}", errs, THM11_TOL))
    return out


THM12_X = (-4.0, -2.0, 0.0, 2.0)
THM12_W = (-1.5, -0.5, 0.0, 0.5, 1.5)


def thm12(table=None) -> list[Check]:
    """Operator route vs Lax route for ``f(x, w)`` on the 4 x 5 grid."""
    tb = painleve._table(table)
    errs = [fredholm.f_fredholm(x, w) - painleve.lax_propagate_w(x, w, tb).f
            for x in THM12_X for w in THM12_W]
    return [_check("thm12.grid", errs, THM12_TOL)]


def _fd_lax_residuals(x, w, tb, h=1e-4):
    fp, gp = fredholm.f_and_g_fredholm(x + h, w)
    fm, gm = fredholm.f_and_g_fredholm(x - h, w)
    f, g = fredholm.f_and_g_fredholm(x, w)
    u = float(tb.u_at(x))
    return [(fp - fm) / (2 * h) - u * g, (gp - gm) / (2 * h) - u * f + w * g]


def airy_resolvent_product(x: float = 0.0) -> float:
    """``<(1 - A_x)^{-1} Ai, Ai>``, the coefficient of ``1/w`` in ``1 - f(x, w)``."""
    op = fredholm.operator_for(x)
    nodes = op.quad.nodes
    y = fredholm.resolvent_apply(op, airy_ai(nodes))
    return float(np.sum(op.quad.weights * y * airy_ai(nodes)))


def lemma(table=None) -> list[Check]:
    """Properties of ``(f, g)``: reality, initial data, reflection, Lax equations, limits."""
    tb = painleve._table(table)
    out = []

    imag = []
    for x, w in [(-2.0, 0.7), (0.0, -1.2), (1.0, 1.5), (-1.0, -0.4)]:
        st = painleve.lax_propagate_w(x, w, tb, via=(0.5 * w + 1j,))
        imag += [np.imag(st.f), np.imag(st.g)]
    out.append(_check("lemma.reality", imag, 1e-10))

    out.append(_check("lemma.initial",
                      [fredholm.f_fredholm(x, 0.0) - tb.E_at(x) for x in (-2.0, 0.0, 2.0)], 1e-7))

    refl = [fredholm.f_fredholm(0.0, 0.8) + fredholm.g_fredholm(0.0, -0.8) * math.exp(0.8**3 / 3)]
    w, x = 0.7, -1.0
    refl.append(painleve.lax_propagate_w(x, w, tb).f
                + painleve.lax_propagate_w(x, -w, tb).g * math.exp(w**3 / 3 - x * w))
    out.append(_check("lemma.reflection", refl, 1e-6))

    res = []
    for x, w in [(-1.0, 0.5), (0.0, -0.7), (1.0, 1.2)]:
        res += _fd_lax_residuals(x, w, tb)
    out.append(_check("lemma.lax_residuals", res, 1e-4))

    out.append(_check("lemma.limit_plus", [1.0 - painleve.lax_propagate_w(0.0, 5.0, tb).f], 1e-2))
    out.append(_check("lemma.limit_minus", [painleve.lax_propagate_w(0.0, -5.0, tb).f], 1e-2))
    # 1 - f(0, w) = c / w + O(1/w^2); Richardson on w = 20, 40 removes the O(1/w^2) term
    c = airy_resolvent_product(0.0)
    r20 = 20.0 * (1.0 - painleve.lax_propagate_w(0.0, 20.0, tb).f)
    r40 = 40.0 * (1.0 - painleve.lax_propagate_w(0.0, 40.0, tb).f)
    out.append(_check("lemma.limit_plus_rate", [2.0 * r40 - r20 - c], 1e-3))

    w = -4.0
    ys = np.array([-1.0, 0.0, 1.0])
    vals = np.array([fredholm.f_fredholm(y * math.sqrt(-w) + w * w, w) for y in ys])
    out.append(_check("lemma.erf_limit", vals - norm.cdf(ys), 0.02))
    out.append(_check("lemma.erf_limit_var2", vals - norm.cdf(ys / math.sqrt(2.0)), 0.02))
    return out


PROP1_N = (2, 5, 10)
# pi_n^* is checked inside the disk and pi_n outside, where each series converges.
PROP1_Z_IN = (0.5, -0.3 + 0.4j, 0.8j)
PROP1_Z_OUT = (2.0, -0.9 + 1.2j, 1.6j)


def opuc_suite(t: float = 1.0, dim: int = 60) -> list[Check]:
    """Operator vs Toeplitz forms of ``pi_n^*`` and ``pi_n``."""
    sym = opuc.LaurentSymbol.bessel(t)
    star, plain = [], []
    for n in PROP1_N:
        for z in PROP1_Z_IN:
            star.append(opuc.pi_star_operator(sym, n, z, dim) - opuc.pi_star_toeplitz(sym, n, z))
        for z in PROP1_Z_OUT:
            plain.append(opuc.pi_operator(sym, n, z, dim) - opuc.pi_toeplitz(sym, n, z))
    return [_check("opuc.pi_star", star, OPUC_TOL), _check("opuc.pi", plain, OPUC_TOL)]


def gcbo(t: float = 1.0, dim: int = 60) -> list[Check]:
    sym = opuc.LaurentSymbol.bessel(t)
    errs = [np.subtract(*opuc.gcbo_check(sym, n, dim)) for n in (1, 4, 8)]
    return [_check("gcbo.identity", errs, GCBO_TOL)]


SCALING_T = (50.0, 100.0, 200.0)
SCALING_W = (-0.5, 0.0, 0.5)


def scaling(x: float = 0.0, table=None) -> list[Check]:
    """``|e^{tz} pi_n^*(z) - f(x, w)|`` must shrink over ``t`` and end below 0.05."""
    tb = painleve._table(table)
    out = []
    for w in SCALING_W:
        errs = []
        for t in SCALING_T:
            lhs, ref = opuc.scaling_probe(t, x, w, tb)
            errs.append(abs(lhs - ref))
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        out.append(Check(f"scaling.w={w:g}", decreasing and errs[-1] <= SCALING_TOL,
                         errs[-1], SCALING_TOL))
    return out


SUITES = {
    "thm11": thm11,
    "thm12": thm12,
    "lemma": lemma,
    "opuc": opuc_suite,
    "gcbo": gcbo,
    "scaling": scaling,
}


def run_suite(name: str, trials: int = 20, seed: int = 7, table=None) -> list[Check]:
    """Run one suite; ``thm11`` takes ``trials`` and ``seed``."""
    if name == "thm11":
        return thm11(trials, seed, table)
    if name in ("thm12", "lemma", "scaling"):
        return SUITES[name](table=table)
    return SUITES[name]()
