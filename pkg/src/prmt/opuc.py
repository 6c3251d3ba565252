"""Orthogonal polynomials on the unit circle and their lattice-operator form.

Monic OPUC ``pi_n`` for a positive symbol are computed two ways: as ratios of
Toeplitz determinants and as ``1 - <(1 - P_n A B P_n)^{-1} P_n Q, P_n R>``
on ``{n, n+1, ...}``, with ``A``, ``B`` built from the Wiener-Hopf quotient
``psi = phi_+ / phi_-``. The large-``t`` probe for ``exp(t(z + 1/z))`` runs
in ball arithmetic, since the Toeplitz matrices involved have condition
numbers growing like ``exp(c t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import iv, jv

from .errors import InvalidParams, NotConverged, SeriesNotConverged

TAIL_TOL = 1e-16
INNER_MARGIN = 40
SERIES_CUTOFF = 0.999
# Fourier grid used for Wiener-Hopf data of a general symbol.
_WH_GRID = 2048


@dataclass(frozen=True, eq=False)
class LaurentSymbol:
    """Fourier data of a symbol on the unit circle.

    ``coeffs[K + k]`` is the ``k``-th Fourier coefficient for ``|k| <= K``;
    ``log_coeffs`` likewise for ``log phi`` (``None`` when the symbol has no
    logarithm on record, e.g. after multiplying by a linear factor).
    ``psi`` and ``psi_inv`` hold Fourier coefficients of ``phi_+/phi_-`` and
    its reciprocal on ``[-P, P]``.
    """

    coeffs: np.ndarray
    K: int
    log_coeffs: np.ndarray | None = None
    psi: np.ndarray | None = None
    psi_inv: np.ndarray | None = None
    t: float | None = None

    def coeff(self, k):
        """Coefficients at integer indices ``k`` (zero outside the band)."""
        k = np.asarray(k)
        inside = np.abs(k) <= self.K
        out = np.where(inside, self.coeffs[np.clip(k + self.K, 0, 2 * self.K)], 0.0)
        return out

    def log_coeff(self, k):
        if self.log_coeffs is None:
            raise InvalidParams("symbol has no logarithm on record")
        L = (self.log_coeffs.size - 1) // 2
        k = np.asarray(k)
        return np.where(np.abs(k) <= L, self.log_coeffs[np.clip(k + L, 0, 2 * L)], 0.0)

    def _wh(self, arr, k):
        if arr is None:
            raise InvalidParams("symbol has no Wiener-Hopf data")
        P = (arr.size - 1) // 2
        k = np.asarray(k)
        return np.where(np.abs(k) <= P, arr[np.clip(k + P, 0, 2 * P)], 0.0)

    def psi_coeff(self, k):
        if self.t is not None and self.psi is None:
            return jv(np.asarray(k), 2.0 * self.t)
        return self._wh(self.psi, k)

    def psi_inv_coeff(self, k):
        if self.t is not None and self.psi_inv is None:
            k = np.asarray(k)
            return (-1.0) ** (k % 2) * jv(k, 2.0 * self.t)
        return self._wh(self.psi_inv, k)

    @property
    def tail(self) -> float:
        """Largest coefficient modulus at the band edge, relative to the peak."""
        c = np.abs(self.coeffs)
        return float(max(c[0], c[-1]) / c.max())

    # -- constructors -------------------------------------------------------

    @classmethod
    def bessel(cls, t: float) -> "LaurentSymbol":
        """``phi(z) = exp(t (z + 1/z))``: ``phi_k = I_k(2t)``, ``psi_k = J_k(2t)``."""
        if not t > 0:
            raise InvalidParams("t must be positive")
        i0 = iv(0, 2 * t)
        K = 1
        while iv(K, 2 * t) > TAIL_TOL * i0 * 1e-1:
            K += 1
        ks = np.arange(-K, K + 1)
        log_c = np.zeros(3)
        log_c[0] = log_c[2] = t
        return cls(iv(np.abs(ks), 2 * t).astype(complex), K, log_c.astype(complex), t=float(t))

    @classmethod
    def from_function(cls, func, K: int = 128, wh_scale: complex = 1.0) -> "LaurentSymbol":
        """Symbol from a callable positive on ``|z| = 1`` and analytic near it.

        Fourier and Wiener-Hopf data come from the FFT on a fine grid.
        ``wh_scale`` multiplies ``psi`` (and divides ``psi^{-1}``); every
        quantity of interest is independent of it.
        """
        M = _WH_GRID
        z = np.exp(2j * np.pi * np.arange(M) / M)
        vals = np.asarray(func(z), dtype=complex)
        if np.max(np.abs(vals.imag)) > 1e-12 * np.max(np.abs(vals)) or np.min(vals.real) <= 0:
            raise InvalidParams("symbol must be positive on the unit circle")

        def fourier(v, half):
            c = np.fft.fft(v) / M
            ks = np.arange(-half, half + 1)
            return c[ks % M]

        coeffs = fourier(vals, K)
        if np.max(np.abs(coeffs[[0, -1]])) > 1e-14 * np.max(np.abs(coeffs)):
            raise InvalidParams("Fourier coefficients do not decay within the band")
        logc_full = np.fft.fft(np.log(vals.real)) / M
        ks = np.fft.fftfreq(M, 1.0 / M).astype(int)
        plus = np.where(ks > 0, logc_full, 0.0)
        minus = np.where(ks < 0, logc_full, 0.0)
        log_psi = np.fft.ifft(plus * M) - np.fft.ifft(minus * M) - logc_full[0]
        P = M // 4
        psi = wh_scale * fourier(np.exp(log_psi), P)
        psi_inv = fourier(np.exp(-log_psi), P) / wh_scale
        return cls(coeffs, K, fourier(np.log(vals.real), K), psi, psi_inv)


def toeplitz_det(sym: LaurentSymbol, n: int) -> complex:
    """``det(phi_{i-j})_{0 <= i, j < n}``; ``D_0 = 1``."""
    if n < 0:
        raise InvalidParams("n must be >= 0")
    if n == 0:
        return 1.0 + 0j
    idx = np.arange(n)
    T = sym.coeff(idx[:, None] - idx[None, :])
    sign, logdet = np.linalg.slogdet(T)
    return complex(sign * np.exp(logdet))


def symbol_times_linear(sym: LaurentSymbol, z: complex, variant: str) -> LaurentSymbol:
    """Multiply by ``(1 - z/w)`` (``outer_root``) or ``(z - w)`` (``inner_root``)."""
    K = sym.K + 1
    ks = np.arange(-K, K + 1)
    if variant == "outer_root":
        c = sym.coeff(ks) - z * sym.coeff(ks + 1)
    elif variant == "inner_root":
        c = z * sym.coeff(ks) - sym.coeff(ks - 1)
    else:
        raise InvalidParams(f"unknown variant {variant!r}")
    return LaurentSymbol(np.asarray(c, dtype=complex), K)


def _det_ratio(num: LaurentSymbol, den: LaurentSymbol, n: int) -> complex:
    if n == 0:
        return 1.0 + 0j
    idx = np.arange(n)
    s1, l1 = np.linalg.slogdet(num.coeff(idx[:, None] - idx[None, :]))
    s2, l2 = np.linalg.slogdet(den.coeff(idx[:, None] - idx[None, :]))
    return complex(s1 / s2 * np.exp(l1 - l2))


def pi_star_toeplitz(sym: LaurentSymbol, n: int, z: complex) -> complex:
    """``pi_n^*(z) = D_n(phi_z) / D_n(phi)``."""
    return _det_ratio(symbol_times_linear(sym, z, "outer_root"), sym, n)


def pi_toeplitz(sym: LaurentSymbol, n: int, z: complex) -> complex:
    """Monic ``pi_n(z) = D_n(phi^z) / D_n(phi)``."""
    return _det_ratio(symbol_times_linear(sym, z, "inner_root"), sym, n)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """``AB`` restricted to ``{0, ..., dim-1}^2`` with inner sum over ``dim + 40`` terms."""

    dim: int
    AB: np.ndarray
    sign_flag: bool
    wh_constant: complex
    tail: float


def _signs(n):
    return (-1.0) ** np.arange(n)


def truncated_operator(sym: LaurentSymbol, dim: int, sign_flag: bool = False,
                       wh_constant: complex = 1.0) -> TruncatedOperator:
    inner = dim + INNER_MARGIN
    j = np.arange(dim + INNER_MARGIN)
    m = np.arange(inner)
    A = sym.psi_inv_coeff(j[:, None] + m[None, :] + 1) / wh_constant
    B = sym.psi_coeff(-m[:, None] - j[None, :] - 1) * wh_constant
    if sign_flag:
        A = A * np.outer(_signs(j.size), _signs(inner))
        B = B * np.outer(_signs(inner), _signs(j.size))
    full = A @ B
    tail = float(max(np.abs(full[dim:, :]).max(), np.abs(full[:, dim:]).max()))
    return TruncatedOperator(dim, full[:dim, :dim], sign_flag, wh_constant, tail)


def qr_vectors(sym: LaurentSymbol, z: complex, dim: int, sign_flag: bool = False,
               wh_constant: complex = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """``Q(j) = (psi^{-1})_{j+1}`` and ``R(k) = sum_{m>=1} z^m psi_{m-k-1}``, ``|z| < 1``."""
    z = complex(z)
    if abs(z) >= SERIES_CUTOFF:
        raise SeriesNotConverged(f"|z| = {abs(z):.4f} too close to the unit circle")
    j = np.arange(dim)
    Q = sym.psi_inv_coeff(j + 1) / wh_constant
    if z == 0:
        R = np.zeros(dim, dtype=complex)
    else:
        peak = max(1.0, float(np.max(np.abs(sym.psi_coeff(np.arange(-dim, dim))))))
        terms = int(math.ceil(math.log(1e-17 / peak) / math.log(abs(z)))) + 1
        m = np.arange(1, terms + 1)
        R = (sym.psi_coeff(m[None, :] - j[:, None] - 1) * z ** m[None, :]).sum(axis=1) * wh_constant
    if sign_flag:
        Q, R = Q * _signs(dim), R * _signs(dim)
    return np.asarray(Q, dtype=complex), np.asarray(R, dtype=complex)


def uv_vectors(sym: LaurentSymbol, z: complex, dim: int, wh_constant: complex = 1.0):
    """``U(j) = sum_{m>=1} z^{-m} (psi^{-1})_{j+1-m}`` and ``V(k) = psi_{-k-1}``, ``|z| > 1``."""
    z = complex(z)
    if abs(z) * SERIES_CUTOFF <= 1.0:
        raise SeriesNotConverged(f"|z| = {abs(z):.4f} too close to the unit circle")
    j = np.arange(dim)
    peak = max(1.0, float(np.max(np.abs(sym.psi_inv_coeff(np.arange(-dim, dim))))))
    terms = int(math.ceil(math.log(1e-17 / peak) / math.log(1.0 / abs(z)))) + 1
    m = np.arange(1, terms + 1)
    U = (sym.psi_inv_coeff(j[:, None] + 1 - m[None, :]) * z ** (-m[None, :])).sum(axis=1) / wh_constant
    V = sym.psi_coeff(-j - 1) * wh_constant
    return np.asarray(U, dtype=complex), np.asarray(V, dtype=complex)


def _bracket(op: TruncatedOperator, n: int, left: np.ndarray, right: np.ndarray) -> complex:
    K = op.AB[n:, n:]
    y = np.linalg.solve(np.eye(K.shape[0]) - K, left[n:])
    return 1.0 - complex(np.sum(y * right[n:]))


def _check_dim(n, dim):
    if dim < n + 10:
        raise InvalidParams("dim must exceed n by at least 10")


def pi_star_operator(sym: LaurentSymbol, n: int, z: complex, dim: int = 60,
                     sign_flag: bool = False, wh_constant: complex = 1.0) -> complex:
    """``pi_n^*(z)`` from the lattice operator, ``|z| < 1``."""
    _check_dim(n, dim)
    op = truncated_operator(sym, dim, sign_flag, wh_constant)
    Q, R = qr_vectors(sym, z, dim, sign_flag, wh_constant)
    ks = np.arange(1, (sym.log_coeffs.size - 1) // 2 + 1)
    pref = np.exp(-np.sum(sym.log_coeff(ks) * complex(z) ** ks))
    return complex(pref * _bracket(op, n, Q, R))


def pi_operator(sym: LaurentSymbol, n: int, z: complex, dim: int = 60,
                wh_constant: complex = 1.0) -> complex:
    """Monic ``pi_n(z)`` from the lattice operator, ``|z| > 1``."""
    _check_dim(n, dim)
    op = truncated_operator(sym, dim, False, wh_constant)
    U, V = uv_vectors(sym, z, dim, wh_constant)
    ks = np.arange(1, (sym.log_coeffs.size - 1) // 2 + 1)
    z = complex(z)
    pref = z**n * np.exp(-np.sum(sym.log_coeff(-ks) * z ** (-ks)))
    return complex(pref * _bracket(op, n, U, V))


def gcbo_check(sym: LaurentSymbol, n: int, dim: int = 60) -> tuple[complex, complex]:
    """Both sides of ``D_n / (G^n E) = det(1 - P_n A B P_n)``."""
    _check_dim(n, dim)
    L = (sym.log_coeffs.size - 1) // 2
    ks = np.arange(1, L + 1)
    G = np.exp(sym.log_coeff(0))
    E = np.exp(np.sum(ks * sym.log_coeff(ks) * sym.log_coeff(-ks)))
    lhs = toeplitz_det(sym, n) / (G**n * E)
    op = truncated_operator(sym, dim)
    K = op.AB[n:, n:]
    rhs = np.linalg.det(np.eye(K.shape[0]) - K)
    return complex(lhs), complex(rhs)


# -- large-t probe in ball arithmetic ---------------------------------------

def probe_precision(t: float) -> int:
    """Working precision in bits; the Toeplitz system loses about 7 bits per unit t."""
    return int(256 + 7 * t)


@lru_cache(maxsize=16)
def _monic_coefficients(t: float, n: int, prec: int) -> tuple:
    """Coefficients ``c_k`` of ``pi_n(z) = z^n + sum_{k<n} c_k z^k`` for ``exp(t(z + 1/z))``.

    Orthogonality to ``z^j``, ``j < n``, reads ``sum_k c_k phi_{j-k} = -phi_{j-n}``.
    The symbol is real and even, so the coefficients are real.
    """
    from flint import arb, arb_mat, ctx

    old = ctx.prec
    ctx.prec = prec
    try:
        two_t = 2 * arb(t)
        phi = [two_t.bessel_i(k) for k in range(n + 1)]
        T = arb_mat(n, n, [phi[abs(i - j)] for i in range(n) for j in range(n)])
        rhs = arb_mat(n, 1, [-phi[n - j] for j in range(n)])
        sol = T.solve(rhs, algorithm="approx")
        return tuple(sol[k, 0] for k in range(n)), prec
    finally:
        ctx.prec = old


def _scaled_pi_star(t: float, n: int, z_float_w: float, prec: int) -> float:
    from flint import arb, ctx

    coeffs, _ = _monic_coefficients(t, n, prec)
    old = ctx.prec
    ctx.prec = prec
    try:
        tt = arb(t)
        z = -1 + arb(z_float_w) / tt ** (arb(1) / 3)
        # pi_n^*(z) = 1 + sum_k c_k z^{n-k}, evaluated by Horner in z
        acc = arb(0)
        for k in range(n):
            acc = (acc + coeffs[k]) * z
        val = (tt * z).exp() * (1 + acc)
        return float(val.mid())
    finally:
        ctx.prec = old


def scaling_probe(t: float, x: float, w: float, table=None) -> tuple[float, float]:
    """``(exp(t z) pi_n^*(z), f(x, w))`` with ``n = [2t + x t^{1/3}]``, ``z = -1 + w t^{-1/3}``.

    The left side is computed in ball arithmetic at two working precisions;
    :class:`NotConverged` is raised if they disagree beyond ``1e-12``.
    """
    from . import painleve

    if t < 10:
        raise InvalidParams("t must be >= 10")
    n = int(math.floor(2 * t + x * t ** (1.0 / 3.0)))
    if n < 1:
        raise InvalidParams("scaled degree must be positive")
    prec = probe_precision(t)
    lhs = _scaled_pi_star(float(t), n, float(w), prec)
    check = _scaled_pi_star(float(t), n, float(w), prec + 128)
    if not abs(lhs - check) <= 1e-12 * max(1.0, abs(check)):
        raise NotConverged(f"precision check failed at t={t}: {lhs} vs {check}")
    f_ref = painleve.lax_propagate_w(x, w, table).f
    return check, float(np.real(f_ref))
