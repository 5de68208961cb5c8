"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line, then asserts."""
import math
import time

import numpy as np
import pytest

from jumpeig import asym, bvp, degenerate, eigen, mc
from jumpeig.model import build_grid, build_jump_measure, build_rate_field

SQRT2 = math.sqrt(2.0)
LIN_LIMIT = 1.41823
SWEEP = [1e2, 4e2, 1.6e3, 6.4e3, 2.56e4]


@pytest.fixture
def report(capsys):
    def _report(n, title, checks, elapsed, limit):
        checks = dict(checks)
        checks[f"runtime {elapsed:.1f}s < {limit:g}s"] = elapsed < limit
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        detail = "; ".join(f"{k} [{'ok' if v else 'NOT MET'}]" for k, v in checks.items())
        with capsys.disabled():
            print(f"\ncriterion {n:2d} {'PASS' if ok else 'FAIL'} | {title} | {detail}")
        assert ok, f"criterion {n} failed: {', '.join(failed)}"
    return _report


def _bvp_err(n, gamma, lam):
    g = build_grid(n)
    u, v = bvp.solve_uv(lam, gamma, build_rate_field("constant", g), g)
    ue, ve = bvp.closed_form_constant_V(lam, gamma, 1.0, g.nodes)
    return max(np.max(np.abs(u - ue)), np.max(np.abs(v - ve)))


def test_criterion_01_bvp_oracle(report):
    t0 = time.perf_counter()
    checks = {}
    for gamma in (2.0, 200.0):
        for lam in (0.0, gamma / 2):
            e1, e2 = _bvp_err(1000, gamma, lam), _bvp_err(2000, gamma, lam)
            checks[f"g={gamma:g},l={lam:g}: err {e2:.2e} <= 1e-6"] = e2 <= 1e-6
            checks[f"g={gamma:g},l={lam:g}: ratio {e1 / e2:.3f} in [3.5,4.5]"] = 3.5 <= e1 / e2 <= 4.5
    report(1, "BVP vs closed form", checks, time.perf_counter() - t0, 1)


def test_criterion_02_route_agreement(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    worst = 0.0
    for V in (build_rate_field("constant", g), build_rate_field("linear", g, slope=0.5)):
        for mu in (build_jump_measure("uniform", g), build_jump_measure("poly", g, k=1),
                   build_jump_measure("poly", g, k=2)):
            for gamma in (10.0, 100.0, 1000.0):
                a = eigen.principal_eigenvalue_fixed_point(gamma, V, mu, g).lambda0
                b = eigen.principal_eigenvalue_matrix(gamma, V, mu, g).lambda0
                worst = max(worst, abs(a - b) / a)
    report(2, "eigen route agreement", {f"max rel diff {worst:.2e} <= 1e-6": worst <= 1e-6},
           time.perf_counter() - t0, 10)


def test_criterion_03_reference_eigenvalue(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    lam = eigen.principal_eigenvalue(100.0, build_rate_field("constant", g),
                                     build_jump_measure("uniform", g), g).lambda0
    report(3, "reference eigenvalue", {f"lambda0 {lam:.6f} = 15.373 +- 0.03": abs(lam - 15.373) <= 0.03},
           time.perf_counter() - t0, 1)


def _intercept(V, mu):
    return asym.sweep_gamma(SWEEP, V, mu, richardson=True).extrapolated_intercept


def test_criterion_04_limit_k0(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    mu = build_jump_measure("uniform", g)
    c0 = _intercept(build_rate_field("constant", g), mu)
    c1 = _intercept(build_rate_field("linear", g, slope=0.5), mu)
    e0, e1 = abs(c0 / SQRT2 - 1), abs(c1 / LIN_LIMIT - 1)
    report(4, "k=0 limit constant", {f"V=1 intercept {c0:.5f} within 2% of sqrt2 ({e0:.2%})": e0 < 0.02,
                                     f"linear intercept {c1:.5f} within 3% of 1.41823 ({e1:.2%})": e1 < 0.03},
           time.perf_counter() - t0, 120)


def test_criterion_05_limit_vanishing_densities(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    V = build_rate_field("constant", g)
    checks = {}
    for k, target, tol in ((1, 6.0, 0.03), (2, 30 * SQRT2, 0.04), (3, 420.0, 0.06)):
        c = _intercept(V, build_jump_measure("poly", g, k=k))
        err = abs(c / target - 1)
        checks[f"k={k} intercept {c:.4f} vs {target:.4f} ({err:.2%} < {tol:.0%})"] = err < tol
    report(5, "k=1,2,3 limit constants", checks, time.perf_counter() - t0, 300)


def test_criterion_06_atom_exponential_decay(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    sw = asym.sweep_gamma([100.0, 400.0, 900.0, 1600.0], build_rate_field("constant", g),
                          build_jump_measure("atom", g, location=0.5), richardson=False)
    fit = asym.exponential_decay_fit(sw.gammas, sw.lambda0s)
    report(6, "atom measure exponential decay",
           {f"r2 {fit.r_squared:.5f} > 0.99": fit.r_squared > 0.99,
            f"slope {-fit.c_hat:.4f} = -0.707 +- 0.05": abs(fit.c_hat - 1 / SQRT2) <= 0.05},
           time.perf_counter() - t0, 30)


def test_criterion_07_lemma_diagnostics(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    V, mu = build_rate_field("constant", g), build_jump_measure("uniform", g)
    d5 = asym.lemma_diagnostics(5000.0, V, mu, g)
    d1 = asym.lemma_diagnostics(1000.0, V, mu, g, 0.1)
    r = [asym.lemma_diagnostics(x, V, mu, g).sublinearity_ratio for x in (1e2, 1e3, 1e4)]
    report(7, "lemma diagnostics",
           {f"normal-derivative errors {max(d5.normal_deriv_errs):.4f} < 0.03": max(d5.normal_deriv_errs) < 0.03,
            f"sup|gamma v - 1/V| {d1.v_limit_sup:.4f} < 0.1": d1.v_limit_sup < 0.1,
            "lambda0/gamma strictly decreasing " + "/".join(f"{x:.4f}" for x in r): r[0] > r[1] > r[2]},
           time.perf_counter() - t0, 10)


def test_criterion_08_monte_carlo(report):
    t0 = time.perf_counter()
    g = build_grid(2000)
    V, mu = build_rate_field("constant", g), build_jump_measure("uniform", g)
    k = np.arange(1, 400, 2)
    exact = float(np.sum(4 / (k * np.pi) * np.sin(k * np.pi / 2) * np.exp(-k**2 * np.pi**2 / 2)))
    a = mc.survival_probability(0.0, V, mu, 1.0, 1_000_000, 1e-4, seed=20240501, x0=0.5)
    b = mc.survival_probability(0.0, V, mu, 1.0, 1_000_000, 1e-4, seed=20240501, x0=0.5)
    d = mc.decay_rate_estimate(50.0, V, mu, np.linspace(0.1, 0.6, 6), 200_000, seed=7)
    lam = eigen.principal_eigenvalue(50.0, V, mu, g).lambda0
    z = (a.value - exact) / a.std_error
    report(8, "Monte Carlo survival and decay",
           {f"survival {a.value:.5f} vs {exact:.5f} (z={z:+.2f})": abs(z) <= 3,
            "re-run bit-identical": a == b,
            f"decay rate {d.rate:.3f} within 15% of {lam:.3f}": abs(d.rate - lam) <= 0.15 * lam},
           time.perf_counter() - t0, 600)


def test_criterion_09_feynman_kac(report):
    t0 = time.perf_counter()
    checks = {}
    for i, x in enumerate((0.25, 0.5, 0.75)):
        est = mc.fk_estimate_u(x, 0.0, 2.0, build_rate_field("constant", build_grid(3)), 100_000,
                               seed=900 + i)
        ue, _ = bvp.closed_form_constant_V(0.0, 2.0, 1.0, x)
        z = (est.value - float(ue)) / est.std_error
        checks[f"x0={x}: {est.value:.4f} vs {float(ue):.4f} (z={z:+.2f})"] = abs(z) <= 3
    report(9, "Feynman-Kac cross-check", checks, time.perf_counter() - t0, 60)


def test_criterion_10_degenerate_explorer(report):
    t0 = time.perf_counter()
    ds = degenerate.degenerate_sweep([1e3, 4e3, 1.6e4, 6.4e4])
    slopes = ds.local_slopes
    lo = degenerate.supersolution_check(1e6, 0.01 * 1e6 ** (1 / 3), ">=0")
    hi = degenerate.supersolution_check(1e6, 0.01 * 1e6 ** (2 / 3), "<=0")
    exploratory = f"exploratory exponent {ds.fitted_exponent:.3f} (no reference)"
    report(10, "degenerate explorer",
           {"slopes " + "/".join(f"{s:.3f}" for s in slopes) + " in [0.28,0.72]":
                bool(np.all((slopes >= 0.28) & (slopes <= 0.72))),
            f"lower construction min residual {lo.extreme_residual:.4g} >= 0": lo.holds,
            f"upper construction max residual {hi.extreme_residual:.4g} <= 0": hi.holds,
            exploratory: math.isfinite(ds.fitted_exponent)},
           time.perf_counter() - t0, 300)
