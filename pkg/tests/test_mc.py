import math
import warnings

import numpy as np
import pytest
from scipy import stats

from jumpeig import bvp, eigen, mc
from jumpeig.errors import InvalidArgument
from jumpeig.model import build_grid, build_jump_measure, build_rate_field


def series_survival(t, x0=0.5, terms=200):
    k = np.arange(1, 2 * terms, 2)
    return float(np.sum(4 / (k * np.pi) * np.sin(k * np.pi * x0) * np.exp(-k**2 * np.pi**2 * t / 2)))


@pytest.fixture(scope="module")
def g():
    return build_grid(2000)


@pytest.fixture(scope="module")
def V(g):
    return build_rate_field("constant", g)


@pytest.fixture(scope="module")
def mu(g):
    return build_jump_measure("uniform", g)


def test_series_oracle_value():
    assert series_survival(1.0) == pytest.approx(0.00915699, rel=1e-6)


def test_sample_atom(g):
    s = mc.sample_jump(build_jump_measure("atom", g, location=0.5), 1, 1000)
    assert np.all(s == 0.5)


def test_sample_uniform(mu):
    s = mc.sample_jump(mu, 2, 100_000)
    assert abs(s.mean() - 0.5) < 0.005 and s.min() > 0 and s.max() < 1


def test_sample_beta22(g):
    s = mc.sample_jump(build_jump_measure("poly", g, k=1), 3, 100_000)
    assert abs(s.mean() - 0.5) < 0.005
    assert s.var() == pytest.approx(0.05, abs=0.002)
    assert stats.kstest(s, stats.beta(2, 2).cdf).pvalue > 0.01


def test_sample_mixture(g):
    mu = build_jump_measure("mixture", g, components=[
        {"preset": "uniform", "mass": 0.7}, {"preset": "atom", "location": 0.2, "mass": 0.3}])
    s = mc.sample_jump(mu, 4, 100_000)
    assert np.mean(s == 0.2) == pytest.approx(0.3, abs=0.005)


def test_invalid_start(V, mu):
    with pytest.raises(InvalidArgument):
        mc.simulate_path(1.2, 1.0, V, mu, 1.0, seed=0)
    with pytest.raises(InvalidArgument):
        mc.survival_probability(0.0, V, mu, 1.0, 1000, seed=None)
    with pytest.raises(InvalidArgument):
        mc.survival_probability(0.0, V, mu, 1.0, 10, seed=1)


def test_single_path(V, mu):
    out = mc.simulate_path(0.5, 20.0, V, mu, 10.0, seed=5, path_index=3)
    assert out.exited and 0 < out.exit_time <= 10.0 and out.n_jumps >= 0
    again = mc.simulate_path(0.5, 20.0, V, mu, 10.0, seed=5, path_index=3)
    assert again == out


def test_time_zero(V, mu):
    assert mc.survival_probability(0.0, V, mu, 0.0, 1000, seed=1, x0=0.5).value == 1.0


def test_brownian_survival_and_determinism(V, mu):
    a = mc.survival_probability(0.0, V, mu, 1.0, 100_000, 1e-4, seed=11, x0=0.5)
    b = mc.survival_probability(0.0, V, mu, 1.0, 100_000, 1e-4, seed=11, x0=0.5)
    assert a == b
    assert abs(a.value - series_survival(1.0)) < 3 * a.std_error


def test_order_independence(V, mu):
    full = mc._simulate(2000, 9, 0.5, 2.0, 1e-3, 30.0, V, mu)
    head = mc._simulate(700, 9, 0.5, 2.0, 1e-3, 30.0, V, mu)
    tail = mc._simulate(1300, 9, 0.5, 2.0, 1e-3, 30.0, V, mu, first_index=700)
    for i in range(3):
        np.testing.assert_array_equal(full[i], np.concatenate((head[i], tail[i])))


def test_dt_refinement(V, mu):
    a = mc.survival_probability(0.0, V, mu, 1.0, 100_000, 1e-4, seed=21, x0=0.5)
    b = mc.survival_probability(0.0, V, mu, 1.0, 100_000, 5e-5, seed=22, x0=0.5)
    assert abs(a.value - b.value) < 2 * math.hypot(a.std_error, b.std_error)


def test_bridge_removes_upward_bias(V, mu):
    ref = series_survival(0.2)
    on = mc.survival_probability(0.0, V, mu, 0.2, 50_000, 1e-3, seed=3, x0=0.5)
    off = mc.survival_probability(0.0, V, mu, 0.2, 50_000, 1e-3, seed=3, x0=0.5, bridge=False)
    assert off.value - ref > 5 * off.std_error
    assert abs(on.value - ref) < 3 * on.std_error


def test_strong_recentering_keeps_paths_alive(g, V):
    atom = build_jump_measure("atom", g, location=0.5)
    est = mc.survival_probability(900.0, V, atom, 1.0, 1000, seed=8, x0=0.5)
    assert est.value == 1.0


@pytest.mark.parametrize("x", [0.3, 0.8])
def test_thinning_constant_rate(g, V, x):
    iv = mc.jump_clock_intervals(x, 7.0, V, 100_000, seed=13)
    assert stats.kstest(iv, "expon", args=(0, 1 / 7.0)).pvalue > 0.01


def test_thinning_variable_rate(g):
    W = build_rate_field("linear", g, slope=1.5)
    x = 0.1
    iv = mc.jump_clock_intervals(x, 5.0, W, 100_000, seed=17)
    assert stats.kstest(iv, "expon", args=(0, 1 / (5.0 * W(x)))).pvalue > 0.01


def test_full_acceptance_at_max_rate(g, V):
    # every candidate accepted: intervals are exactly the candidate gaps
    iv = mc.jump_clock_intervals(0.4, 3.0, V, 50_000, seed=2)
    ref = np.empty(50_000)
    mc._clock_intervals(np.uint64(2), 50_000, 1.0, 1.0, 3.0, ref)
    np.testing.assert_array_equal(iv, ref)
    assert iv.mean() == pytest.approx(1 / 3.0, rel=0.02)


def test_decay_fit_synthetic():
    t = np.linspace(0.1, 2, 10)
    rate, r2 = mc.fit_decay_rate(t, np.exp(-2 * t))
    assert rate == pytest.approx(2.0) and r2 == pytest.approx(1.0)


def test_decay_rate_brownian(V, mu):
    d = mc.decay_rate_estimate(0.0, V, mu, np.linspace(0.2, 1.0, 9), 100_000, seed=31)
    assert abs(d.rate - math.pi ** 2 / 2) < 0.3


def test_decay_rate_matches_pde(g, V, mu):
    d = mc.decay_rate_estimate(50.0, V, mu, np.linspace(0.1, 0.6, 6), 100_000, seed=41)
    lam = eigen.principal_eigenvalue(50.0, V, mu, g).lambda0
    assert abs(d.rate - lam) < 0.15 * lam


def test_decay_truncation_warns(V, mu):
    with pytest.warns(UserWarning, match="fewer than 10 survivors"):
        d = mc.decay_rate_estimate(0.0, V, mu, [0.1, 0.3, 3.0, 6.0], 1000, 1e-3, seed=5)
    assert len(d.t_used) == 2


def test_fk_midpoint(V):
    est = mc.fk_estimate_u(0.5, 0.0, 2.0, V, 100_000, seed=51)
    assert abs(est.value - 0.648) < 0.01


def test_fk_unit_weight(V):
    est = mc.fk_estimate_u(0.3, 4.0, 4.0, V, 2000, seed=52)
    assert est.value == 1.0 and est.std_error == 0.0


def test_fk_near_boundary(V):
    est = mc.fk_estimate_u(0.002, 0.0, 2.0, V, 5000, seed=53)
    assert est.value > 0.99


@pytest.mark.parametrize("gamma", [2.0, 10.0])
def test_fk_matches_bvp(g, V, gamma):
    u = bvp.solve_u(0.0, gamma, V, g)
    for i, x in enumerate([0.1, 0.3, 0.5, 0.7, 0.9]):
        est = mc.fk_estimate_u(x, 0.0, gamma, V, 20_000, seed=60 + i)
        ux = np.interp(x, g.full_nodes, u.full)
        assert abs(est.value - ux) < 3 * est.std_error
