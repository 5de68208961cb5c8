# Rate vanishing at the boundary: V(x) = 6x(1-x), Lebesgue jumps
#
# Only gamma^(1/3) <~ lambda0 <~ gamma^(2/3) is known here. The growth
# exponent printed below is an empirical estimate, not a reference value.

from jumpeig import degenerate

ds = degenerate.degenerate_sweep([1e3, 4e3, 1.6e4, 6.4e4])
for row in ds.sweep.rows():
    print(f"gamma={row['gamma']:>8g}  lambda0={row['lambda0_richardson']:10.4f}  n={round(1 / row['h']) - 1}")
print("local log-log slopes   ", ", ".join(f"{s:.3f}" for s in ds.local_slopes))
print("exploratory exponent   ", round(ds.fitted_exponent, 3))
print("window (1/3, 2/3) +-0.05", ds.window, "->", ds.slopes_in_window)
print("bound certificate      ", degenerate.bound_certificate(ds.sweep))

# The piecewise test function x - gamma^(1/3) x^2 near the ends, flat in the
# middle. Shifted by 0.01 gamma^(1/3) it is a supersolution. Shifted by
# 0.01 gamma^(2/3), the subsolution inequality would need L u <= c u, but
# near x = 0 the term -u''/2 = gamma^(1/3) stays while u -> 0, so the
# maximum residual is about gamma^(1/3) for every shift.

for gamma in (1e4, 1e5, 1e6):
    lo = degenerate.supersolution_check(gamma, 0.01 * gamma ** (1 / 3), ">=0")
    hi = degenerate.supersolution_check(gamma, 0.01 * gamma ** (2 / 3), "<=0")
    print(f"gamma={gamma:8.0e}  min R (>=0 check) {lo.extreme_residual:8.4f} {lo.holds}   "
          f"max R (<=0 check) {hi.extreme_residual:9.3f} {hi.holds}   gamma^(1/3)={gamma ** (1 / 3):.1f}")
