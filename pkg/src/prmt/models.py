"""Monte Carlo models: last passage percolation, spiked covariance maxima, TASEP.

``L(N, M)/M`` with exponential site weights of column means ``l_i`` has the
law of the largest eigenvalue of a complex sample covariance matrix with
population eigenvalues ``l_1..l_N``; TASEP particle counts are read off the
same last passage times. Random streams come from counter-based Philox
generators keyed by ``(seed, stream)`` so results do not depend on how work
is scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import InvalidParams


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by the 128-bit value ``(stream, seed)``."""
    if not (0 <= seed < 2**64 and 0 <= stream < 2**64):
        raise InvalidParams("seed and stream must be unsigned 64-bit integers")
    return np.random.Generator(np.random.Philox(key=(int(stream) << 64) | int(seed)))


def _exp(rng: np.random.Generator, means, shape) -> np.ndarray:
    # inverse transform of uniform draws
    u = rng.random(shape)
    return -np.log1p(-u) * means


@dataclass(frozen=True)
class LppConfig:
    """``N`` columns (servers / population eigenvalues), ``M`` rows (samples).

    The first ``len(spike_means)`` columns have exponential weights with the
    given means; the remaining columns have mean 1.
    """

    N: int
    M: int
    spike_means: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise InvalidParams("N and M must be positive")
        if len(self.spike_means) > self.N:
            raise InvalidParams("more spikes than columns")
        if any(not m > 0 for m in self.spike_means):
            raise InvalidParams("column means must be positive")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.M / self.N)

    def column_means(self) -> np.ndarray:
        means = np.ones(self.N)
        means[: len(self.spike_means)] = self.spike_means
        return means


def lpp_batch(cfg: LppConfig, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws of ``L(N, M)``.

    Sweeps anti-diagonals of the grid; each diagonal is a vectorized
    ``max(left, below) + X`` over all draws at once, so only two diagonals
    are held in memory.
    """
    N, M = cfg.N, cfg.M
    means = cfg.column_means()
    prev = np.zeros((size, 0))
    for d in range(N + M - 1):
        i_lo, i_hi = max(0, d - M + 1), min(d, N - 1)
        ii = np.arange(i_lo, i_hi + 1)
        x = _exp(rng, means[ii], (size, ii.size))
        p_lo = max(0, d - M)  # column index of prev[:, 0]
        # T(i-1, j) and T(i, j-1) both live on the previous diagonal
        left = np.full((size, ii.size), -np.inf)
        below = np.full((size, ii.size), -np.inf)
        li = ii - 1 - p_lo
        ok = (ii - 1 >= 0) & (li >= 0) & (li < prev.shape[1])
        left[:, ok] = prev[:, li[ok]]
        bi = ii - p_lo
        ok = (d - ii - 1 >= 0) & (bi >= 0) & (bi < prev.shape[1])
        below[:, ok] = prev[:, bi[ok]]
        base = np.maximum(left, below)
        base[~np.isfinite(base)] = 0.0
        prev = base + x
    return prev[:, 0]


def lpp_sample(cfg: LppConfig, rng: np.random.Generator) -> float:
    """One draw of ``L(N, M)`` by the row-buffer dynamic program."""
    means = cfg.column_means()
    row = np.zeros(cfg.N)
    for _ in range(cfg.M):
        x = _exp(rng, means, cfg.N)
        acc = 0.0
        for i in range(cfg.N):
            acc = max(acc, row[i]) + x[i]
            row[i] = acc
    return float(row[-1])


def lpp_weights(X) -> float:
    """``L(N, M)`` for an explicit weight array ``X[i, j]`` (column ``i``, row ``j``)."""
    X = np.asarray(X, dtype=float)
    T = np.zeros((X.shape[0] + 1, X.shape[1] + 1))
    for i in range(1, X.shape[0] + 1):
        for j in range(1, X.shape[1] + 1):
            T[i, j] = max(T[i - 1, j], T[i, j - 1]) + X[i - 1, j - 1]
    return float(T[-1, -1])


def lpp_grid(N: int, M: int, means, size: int, rng: np.random.Generator) -> np.ndarray:
    """Full table ``T[s, i, j] = L(i+1, j+1)`` for small grids (columns ``i``, rows ``j``)."""
    means = np.asarray(means, dtype=float)
    T = np.zeros((size, N + 1, M + 1))
    for j in range(1, M + 1):
        x = _exp(rng, means, (size, N))
        for i in range(1, N + 1):
            T[:, i, j] = np.maximum(T[:, i - 1, j], T[:, i, j - 1]) + x[:, i - 1]
    return T[:, 1:, 1:]


def _partition(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if p < extra else 0) for p in range(parts)]


def run_streams(fn, samples: int, seed: int, streams: int = 1, threads: int = 1) -> np.ndarray:
    """Evaluate ``fn(size, rng)`` on ``streams`` independent chunks and concatenate.

    The output depends on ``(seed, samples, streams)`` only; ``threads``
    changes the schedule, not the numbers.
    """
    if streams < 1 or samples < 1:
        raise InvalidParams("streams and samples must be positive")
    sizes = _partition(samples, streams)
    jobs = [(sz, make_rng(seed, s)) for s, sz in enumerate(sizes) if sz]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class SimResult:
    raw: np.ndarray
    samples: np.ndarray
    center: float
    scale: float
    seed: int
    streams: int
    meta: dict = field(default_factory=dict)

    def ecdf(self):
        return empirical_cdf(self.samples)

    def ks(self, reference_cdf) -> float:
        return ks_statistic(self.samples, reference_cdf)

    def to_csv(self, path) -> None:
        lines = [f"# seed={self.seed} streams={self.streams}", "index,raw,scaled"]
        lines += [f"{i},{r:.17g},{s:.17g}" for i, (r, s) in enumerate(zip(self.raw, self.samples))]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# -- scalings ---------------------------------------------------------------

def null_centering(M: int, gamma: float) -> tuple[float, float]:
    """``(center, factor)`` with scaled value ``(L/M - center) * factor``."""
    if M < 1 or gamma < 1:
        raise InvalidParams("need M >= 1 and gamma >= 1")
    return (1 + 1 / gamma) ** 2, gamma / (1 + gamma) ** (4 / 3) * M ** (2 / 3)


def scale_null(L, M: int, gamma: float):
    c, f = null_centering(M, gamma)
    return (np.asarray(L) / M - c) * f


def bbp2_spike_means(gamma: float, M: int, ws) -> np.ndarray:
    """Column means placing spikes at offsets ``w_j`` in the critical window."""
    ws = np.asarray(ws, dtype=float)
    means = 1 + 1 / gamma - (1 + gamma) ** 1.5 * ws / (gamma * M ** (1 / 3))
    if np.any(means <= 0):
        raise InvalidParams("spike offsets give non-positive means")
    return means


def supercritical_centering(M: int, gamma: float, l1: float) -> tuple[float, float]:
    """``(center, factor)`` for a spike above ``1 + 1/gamma``.

    The fluctuations are Gaussian-like of size ``sigma / sqrt(M)`` with
    ``sigma^2 = l1^2 - l1^2 gamma^{-2} / (l1 - 1)^2``, so the factor is
    ``sqrt(M) / sigma``.
    """
    if M < 1 or gamma < 1:
        raise InvalidParams("need M >= 1 and gamma >= 1")
    if not l1 > 1 + 1 / gamma:
        raise InvalidParams("l1 must exceed 1 + 1/gamma")
    rad = l1**2 - l1**2 / gamma**2 / (l1 - 1) ** 2
    if rad <= 0:
        raise InvalidParams("non-positive variance")
    return l1 + l1 / gamma**2 / (l1 - 1), math.sqrt(M) / math.sqrt(rad)


def scale_supercritical(L, M: int, gamma: float, l1: float):
    c, f = supercritical_centering(M, gamma, l1)
    return (np.asarray(L) / M - c) * f


def simulate_lpp(M: int, N: int, spike_means=(), bbp2_w=None, samples: int = 2000,
                 seed: int = 0, streams: int = 1, threads: int = 1) -> SimResult:
    """Scaled largest-eigenvalue samples ``L(N, M)/M`` for one scenario.

    ``bbp2_w`` places critical-window spikes through :func:`bbp2_spike_means`
    and uses the null scaling. Explicit ``spike_means`` whose largest entry
    exceeds ``1 + 1/gamma`` get the supercritical scaling around that entry;
    everything else is scaled as the null case.
    """
    gamma = math.sqrt(M / N)
    if bbp2_w is not None:
        if len(spike_means):
            raise InvalidParams("give either spike_means or bbp2_w")
        spike_means = tuple(bbp2_spike_means(gamma, M, bbp2_w))
        regime = "critical"
    elif len(spike_means) and max(spike_means) > 1 + 1 / gamma:
        regime = "supercritical"
    else:
        regime = "null"
    cfg = LppConfig(N, M, tuple(float(m) for m in spike_means), seed)
    raw = run_streams(lambda size, rng: lpp_batch(cfg, size, rng), samples, seed, streams, threads)
    if regime == "supercritical":
        center, factor = supercritical_centering(M, gamma, max(spike_means))
    else:
        center, factor = null_centering(M, gamma)
    scaled = (raw / M - center) * factor
    meta = {"regime": regime, "gamma": gamma, "spike_means": cfg.spike_means}
    return SimResult(raw, scaled, center, factor, seed, streams, meta)


# -- GUE --------------------------------------------------------------------

def gue_matrices(k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian ``k x k`` draws: diagonal N(0, 1), off-diagonal E|h|^2 = 1."""
    if not 1 <= k <= 8:
        raise InvalidParams("k must be in 1..8")
    g = rng.standard_normal((size, k, k))
    h = rng.standard_normal((size, k, k))
    off = (g + 1j * h) / math.sqrt(2.0)
    upper = np.triu(off, 1)
    diag = rng.standard_normal((size, k))
    mat = upper + np.conj(np.transpose(upper, (0, 2, 1)))
    idx = np.arange(k)
    mat[:, idx, idx] = diag
    return mat


def gue_max_batch(k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    return np.linalg.eigvalsh(gue_matrices(k, size, rng))[:, -1]


def gue_max_sample(k: int, rng: np.random.Generator) -> float:
    return float(gue_max_batch(k, 1, rng)[0])


# -- TASEP ------------------------------------------------------------------

def tasep_count_via_duality(m: int, t_time: float, cfg: LppConfig, rng: np.random.Generator,
                            M_probe: int) -> bool:
    """Event ``#(m, t) >= M_probe``, drawn as ``L(m + M_probe, M_probe) <= t``."""
    if m + M_probe < 1 or M_probe < 1:
        raise InvalidParams("need m + M_probe >= 1 and M_probe >= 1")
    sub = LppConfig(m + M_probe, M_probe, tuple(cfg.spike_means[: m + M_probe]))
    return bool(lpp_batch(sub, 1, rng)[0] <= t_time)


def duality_counts(m: int, t_time: float, rates_means, size: int, rng: np.random.Generator,
                   max_particles: int = 40) -> np.ndarray:
    """``#(m, t)`` per draw as ``max{M : L(m + M, M) <= t}`` on one shared grid.

    ``L(m + M, M)`` increases with ``M`` on a fixed realization, so the count
    is the number of probes that pass. For ``m + M <= 0`` the event is sure.
    """
    sure = max(0, -m)
    n_probe = max_particles
    N = m + n_probe
    means = np.ones(N)
    rm = np.asarray(rates_means, dtype=float)
    means[: min(rm.size, N)] = rm[:N]
    T = lpp_grid(N, n_probe, means, size, rng)
    Ms = np.arange(sure + 1, n_probe + 1)
    passed = T[:, m + Ms - 1, Ms - 1] <= t_time
    return sure + passed.sum(axis=1)


def tasep_event_sim(num_particles: int, rates_first_r_jumps, t_end: float,
                    rng: np.random.Generator, size: int = 1, report_m=()) -> dict:
    """Continuous-time TASEP from the step initial condition ``x_j(0) = 1 - j``.

    Competing exponential clocks: at each step every unblocked particle's
    rate is known (``1/l_i`` for its ``i``-th jump while ``i <= r``, then 1),
    so the next event time is exponential in the total rate and the jumping
    particle is chosen proportionally. Runs are advanced in parallel; a run
    stops once its clock passes ``t_end``. Particles behind the simulated
    ones never influence those in front, so truncation is exact for them.

    Returns ``positions`` (size x num_particles) and ``counts[m]``.
    """
    P = int(num_particles)
    slow = 1.0 / np.asarray(rates_first_r_jumps, dtype=float)
    r = slow.size
    pos = np.tile(1 - np.arange(1, P + 1), (size, 1)).astype(np.int64)
    jumps = np.zeros((size, P), dtype=np.int64)
    clock = np.zeros(size)
    live = np.ones(size, dtype=bool)
    rows = np.arange(size)
    while live.any():
        free = np.ones((size, P), dtype=bool)
        free[:, 1:] = pos[:, :-1] - pos[:, 1:] > 1
        nxt = jumps + 1
        rate = np.where(nxt <= r, slow[np.clip(nxt - 1, 0, max(r - 1, 0))] if r else 1.0, 1.0)
        rate = np.where(free, rate, 0.0)
        total = rate.sum(axis=1)
        dt = _exp(rng, 1.0 / total, size)
        u = rng.random(size) * total
        pick = np.minimum((np.cumsum(rate, axis=1) < u[:, None]).sum(axis=1), P - 1)
        clock = np.where(live, clock + dt, clock)
        move = live & (clock <= t_end)
        pos[rows[move], pick[move]] += 1
        jumps[rows[move], pick[move]] += 1
        live = move
    counts = {m: (pos > m).sum(axis=1) for m in report_m}
    return {"positions": pos, "counts": counts}


# -- traffic formulas ---------------------------------------------------------

def traffic_regime(u: float, ell: float) -> str:
    """Limit law for ``#([ut], t)``: ``"F0"``, ``"Fk"`` or ``"Gk"``."""
    if not -1 < u <= 0:
        raise InvalidParams("u must lie in (-1, 0]")
    crit = 1 - 2 / ell
    if math.isclose(u, crit, abs_tol=1e-12):
        return "Fk"
    if u > crit:
        return "F0"
    if u > -1 / ell:
        return "Gk"
    raise InvalidParams("u outside the stated regimes")


def slow_start_threshold(u: float, t: float, x: float) -> float:
    """Count threshold whose exceedance probability tends to ``F(-x)`` (F0 / Fk regimes)."""
    return 0.25 * (1 - u) ** 2 * t + x * ((1 - u * u) / 4) ** (2 / 3) * t ** (1 / 3)


def slow_start_threshold_gk(u: float, t: float, x: float, ell: float) -> float:
    """Count threshold in the Gaussian-like regime ``-1/ell < u < 1 - 2/ell``."""
    lead = (ell - 1 - ell * u) / ell**2
    fl = (ell - 1) ** 1.5 * (ell - 1 - ell * u) / (ell**4.5 * math.sqrt(ell - 2 - ell * u))
    return lead * t + x * fl * t**0.5


def hole_count(particle_count, m: int):
    """Holes left of site ``m + 1``: ``H(m, t) = #(m, t) + m``."""
    return np.asarray(particle_count) + m


def hole_threshold(u: float, t: float, x: float, ell: float | None = None) -> float:
    """Hole-count thresholds; the particle thresholds shifted by ``[ut]``-scale ``u t``."""
    if ell is None or traffic_regime(u, ell) != "Gk":
        return 0.25 * (1 + u) ** 2 * t + x * ((1 - u * u) / 4) ** (2 / 3) * t ** (1 / 3)
    return slow_start_threshold_gk(u, t, x, ell) + u * t


# -- statistics ---------------------------------------------------------------

def empirical_cdf(samples):
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size

    def cdf(x):
        return np.searchsorted(xs, x, side="right") / n

    return cdf


def ks_statistic(samples, reference_cdf) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), reference_cdf).statistic)


def ks_two_sample(a, b) -> float:
    return float(stats.ks_2samp(a, b).statistic)


def inverse_transform_sample(xs, cdf_values, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from a tabulated CDF by linear interpolation of its inverse."""
    u = rng.random(size)
    keep = np.concatenate([[True], np.diff(cdf_values) > 0])
    return np.interp(u, np.asarray(cdf_values)[keep], np.asarray(xs)[keep])
