import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from prmt import fredholm, models
from prmt.errors import InvalidParams
from prmt.models import LppConfig, make_rng


def test_rng_streams_are_distinct_and_reproducible():
    a = make_rng(5, 0).random(4)
    assert np.array_equal(a, make_rng(5, 0).random(4))
    assert not np.array_equal(a, make_rng(5, 1).random(4))
    assert not np.array_equal(a, make_rng(6, 0).random(4))
    with pytest.raises(InvalidParams):
        make_rng(-1)


def test_lpp_single_cell_mean():
    x = models.lpp_batch(LppConfig(1, 1, (2.5,)), 100_000, make_rng(1))
    assert x.mean() == pytest.approx(2.5, rel=0.02)
    assert stats.kstest(x, stats.expon(scale=2.5).cdf).statistic < 0.01


def test_lpp_forced_path_mean():
    x = models.lpp_batch(LppConfig(1, 2, (1.0,)), 100_000, make_rng(2))
    assert x.mean() == pytest.approx(2.0, rel=0.02)


def test_lpp_two_by_two_mean():
    x = models.lpp_batch(LppConfig(2, 2), 100_000, make_rng(3))
    assert x.mean() == pytest.approx(3.5, rel=0.02)


def test_lpp_batch_agrees_with_row_buffer():
    # anti-diagonal sweep and row buffer agree in law
    cfg = LppConfig(4, 6, (2.0,))
    X = -np.log1p(-make_rng(9).random((4, 6))) * cfg.column_means()[:, None]
    rng = make_rng(11)
    a = models.lpp_batch(cfg, 4000, rng)
    b = np.array([models.lpp_sample(cfg, make_rng(11, s)) for s in range(1, 4001)])
    assert models.ks_two_sample(a, b) < 0.05
    # the explicit-weight program agrees with the last cell of the full table
    T = np.zeros((5, 7))
    for i in range(1, 5):
        for j in range(1, 7):
            T[i, j] = max(T[i - 1, j], T[i, j - 1]) + X[i - 1, j - 1]
    assert models.lpp_weights(X) == T[-1, -1]


def test_lpp_grid_corner_is_lpp():
    g = models.lpp_grid(3, 5, np.ones(3), 20000, make_rng(4))
    b = models.lpp_batch(LppConfig(3, 5), 20000, make_rng(5))
    assert models.ks_two_sample(g[:, -1, -1], b) < 0.03
    assert np.all(np.diff(g, axis=1) >= 0) and np.all(np.diff(g, axis=2) >= 0)


@given(st.integers(0, 2), st.integers(0, 2), st.floats(0.0, 3.0), st.integers(0, 2**32))
def test_lpp_monotone_in_weights(i, j, bump, seed):
    X = make_rng(seed).exponential(size=(3, 3))
    Y = X.copy()
    Y[i, j] += bump
    assert models.lpp_weights(Y) >= models.lpp_weights(X)


def test_config_rejects():
    with pytest.raises(InvalidParams):
        LppConfig(0, 3)
    with pytest.raises(InvalidParams):
        LppConfig(2, 3, (1.0, 1.0, 1.0))
    with pytest.raises(InvalidParams):
        LppConfig(2, 3, (0.0,))


def test_null_scaling_examples():
    assert models.scale_null(4.0 * 8, 8, 1.0) == pytest.approx(0.0, abs=1e-15)
    _, f = models.null_centering(8, 1.0)
    assert f == pytest.approx(2 ** (2 / 3), rel=1e-14)


def test_bbp2_spike_means_examples():
    np.testing.assert_allclose(models.bbp2_spike_means(1.5, 500, [0, 0]), [1 + 1 / 1.5] * 2)
    assert models.bbp2_spike_means(1.0, 1000, [1.0])[0] == pytest.approx(2 - 2**1.5 / 10, rel=1e-14)
    m = models.bbp2_spike_means(1.0, 1000, [-1.0, 0.0, 1.0])
    assert m[0] > m[1] > m[2]
    with pytest.raises(InvalidParams):
        models.bbp2_spike_means(1.0, 8, [10.0])


def test_supercritical_scaling_examples():
    c, f = models.supercritical_centering(100, 1.0, 3.0)
    assert c == pytest.approx(4.5, rel=1e-15)
    assert f == pytest.approx(10 / math.sqrt(9 - 9 / 4), rel=1e-14)
    assert models.scale_supercritical(450.0, 100, 1.0, 3.0) == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(InvalidParams):
        models.supercritical_centering(100, 1.0, 1.5)


def test_simulate_lpp_regimes():
    r = models.simulate_lpp(20, 20, samples=10, seed=1)
    assert r.meta["regime"] == "null"
    r = models.simulate_lpp(20, 20, bbp2_w=[0.0], samples=10, seed=1)
    assert r.meta["regime"] == "critical" and r.meta["spike_means"] == (2.0,)
    r = models.simulate_lpp(20, 20, spike_means=(3.0,), samples=10, seed=1)
    assert r.meta["regime"] == "supercritical" and r.center == pytest.approx(4.5)
    np.testing.assert_allclose(r.samples, (r.raw / 20 - r.center) * r.scale)
    with pytest.raises(InvalidParams):
        models.simulate_lpp(20, 20, spike_means=(3.0,), bbp2_w=[0.0], samples=10)


def test_simulate_lpp_independent_of_threads():
    a = models.simulate_lpp(30, 20, samples=500, seed=42, streams=4, threads=1)
    b = models.simulate_lpp(30, 20, samples=500, seed=42, streams=4, threads=4)
    assert np.array_equal(a.raw, b.raw)
    c = models.simulate_lpp(30, 20, samples=500, seed=42, streams=4, threads=1)
    assert np.array_equal(a.samples, c.samples)


def test_spike_exchangeability():
    a = models.lpp_batch(LppConfig(6, 8, (2.0, 0.5, 1.5)), 10_000, make_rng(21))
    b = models.lpp_batch(LppConfig(6, 8, (1.5, 2.0, 0.5)), 10_000, make_rng(22))
    assert models.ks_two_sample(a, b) <= 0.02


def test_gue_small_k():
    rng = make_rng(8)
    x = models.gue_max_batch(1, 20000, rng)
    assert stats.kstest(x, stats.norm.cdf).statistic < 0.015
    mats = models.gue_matrices(2, 50, rng)
    a, d, b = mats[:, 0, 0].real, mats[:, 1, 1].real, mats[:, 0, 1]
    closed = (a + d) / 2 + np.sqrt((a - d) ** 2 / 4 + np.abs(b) ** 2)
    np.testing.assert_allclose(np.linalg.eigvalsh(mats)[:, -1], closed, atol=1e-12)


def test_gue_trace_and_variances():
    mats = models.gue_matrices(3, 20000, make_rng(12))
    ev = np.linalg.eigvalsh(mats)
    assert np.max(np.abs(ev.sum(axis=1) - np.trace(mats, axis1=1, axis2=2).real)) <= 1e-10
    assert np.allclose(mats, np.conj(np.transpose(mats, (0, 2, 1))))
    assert np.var(mats[:, 0, 0].real) == pytest.approx(1.0, abs=0.05)
    assert np.mean(np.abs(mats[:, 0, 1]) ** 2) == pytest.approx(1.0, abs=0.05)
    with pytest.raises(InvalidParams):
        models.gue_matrices(9, 1, make_rng(0))


def test_gue_max_sample_scalar():
    assert isinstance(models.gue_max_sample(3, make_rng(0)), float)


def test_duality_single_jump():
    rng = make_rng(31)
    cfg = LppConfig(1, 1)
    hits = [models.tasep_count_via_duality(0, 1.0, cfg, rng, 1) for _ in range(20000)]
    assert np.mean(hits) == pytest.approx(1 - math.exp(-1), abs=0.01)
    with pytest.raises(InvalidParams):
        models.tasep_count_via_duality(-2, 1.0, cfg, rng, 1)


def test_single_particle_is_poisson():
    out = models.tasep_event_sim(1, [], 5.0, make_rng(41), size=100_000)
    pos = out["positions"][:, 0]
    assert pos.mean() == pytest.approx(5.0, rel=0.01)
    assert pos.var() == pytest.approx(5.0, rel=0.03)


def test_exclusion_is_kept():
    out = models.tasep_event_sim(12, [2.0, 2.0], 4.0, make_rng(43), size=2000, report_m=(0, 2))
    pos = out["positions"]
    assert np.all(np.diff(pos, axis=1) < 0)
    np.testing.assert_array_equal(out["counts"][0], (pos > 0).sum(axis=1))


def test_duality_matches_event_simulation():
    m, t, S = 2, 6.0, 10_000
    ev = models.tasep_event_sim(25, [], t, make_rng(51), size=S, report_m=(m,))["counts"][m]
    du = models.duality_counts(m, t, [], S, make_rng(52), max_particles=25)
    assert models.ks_two_sample(ev, du) <= 0.02
    # single event P(#(0, 3) >= 2)
    ev0 = models.tasep_event_sim(10, [], 3.0, make_rng(53), size=S, report_m=(0,))["counts"][0]
    du0 = models.duality_counts(0, 3.0, [], S, make_rng(54), max_particles=10)
    assert abs(np.mean(ev0 >= 2) - np.mean(du0 >= 2)) <= 0.03


def test_duality_with_slow_start():
    S = 10_000
    ev = models.tasep_event_sim(20, [2.0], 5.0, make_rng(61), size=S, report_m=(1,))["counts"][1]
    du = models.duality_counts(1, 5.0, [2.0], S, make_rng(62), max_particles=20)
    assert models.ks_two_sample(ev, du) <= 0.03


def test_hole_counts():
    np.testing.assert_array_equal(models.hole_count([0, 3], 4), [4, 7])
    assert models.hole_threshold(-0.5, 100.0, 0.0) == pytest.approx(
        models.slow_start_threshold(-0.5, 100.0, 0.0) - 50.0)


def test_traffic_regimes():
    assert models.traffic_regime(0.0, 2.0) == "Fk"
    assert models.traffic_regime(-0.2, 4.0) == "Gk"
    assert models.traffic_regime(0.0, 1.5) == "F0"
    with pytest.raises(InvalidParams):
        models.traffic_regime(0.5, 2.0)


def test_empirical_cdf_and_ks():
    cdf = models.empirical_cdf([0.3])
    assert cdf(0.2) == 0.0 and cdf(0.3) == 1.0
    assert models.ks_statistic([0.3], stats.uniform.cdf) == pytest.approx(0.7)


def test_ks_against_tabulated_f0():
    xs = np.arange(-8.0, 5.0 + 1e-9, 0.02)
    F = fredholm.tabulate_cdf("f0", xs)
    S = 10_000
    draws = models.inverse_transform_sample(xs, F, S, make_rng(71))
    assert models.ks_statistic(draws, lambda x: np.interp(x, xs, F)) <= 1.63 / math.sqrt(S)


def test_sim_result_csv(tmp_path):
    r = models.simulate_lpp(10, 10, samples=5, seed=3, streams=2)
    p = tmp_path / "s.csv"
    r.to_csv(p)
    data = p.read_bytes()
    assert b"\r" not in data
    lines = data.decode().splitlines()
    assert lines[0] == "# seed=3 streams=2" and lines[1] == "index,raw,scaled"
    assert float(lines[2].split(",")[1]) == r.raw[0]
    assert len(lines) == 7
