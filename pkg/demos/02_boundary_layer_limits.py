# How lambda0 grows with gamma when the jump density vanishes to order k
#
# lambda0 ~ c_k gamma^((1-k)/2). The sweep below rescales lambda0 by
# gamma^((k-1)/2) and extrapolates the scaled column with c + a/sqrt(gamma).

from jumpeig import build_grid, build_jump_measure, build_rate_field, sweep_gamma

grid = build_grid(2000)
V = build_rate_field("constant", grid)
gammas = [1.6e3, 6.4e3, 2.56e4, 1e5]

print(f"{'k':>2} {'exponent':>9} {'expected':>9} {'intercept':>11} {'c_k':>11} {'rel err':>8}")
for k in range(4):
    mu = build_jump_measure("uniform", grid) if k == 0 else build_jump_measure("poly", grid, k=k)
    sw = sweep_gamma(gammas, V, mu, n_min=4000)
    err = sw.extrapolated_intercept / sw.limit_constant - 1
    print(f"{k:>2} {sw.fit_exponent:9.4f} {(1 - k) / 2:9.4f} "
          f"{sw.extrapolated_intercept:11.5f} {sw.limit_constant:11.5f} {err:8.2%}")

# A nonconstant rate changes the constant through the endpoint values of V
# and through int (1/V) dmu.

lin = build_rate_field("linear", grid, slope=0.5)
sw = sweep_gamma(gammas, lin, build_jump_measure("uniform", grid), n_min=4000)
print("\nlinear rate 1 + 0.5 (x - 1/2):")
for row in sw.rows():
    print(f"  gamma={row['gamma']:>8g}  lambda0={row['lambda0_richardson']:.6f}  "
          f"scaled={row['scaled']:.6f}")
print("  intercept", sw.extrapolated_intercept, "limit", sw.limit_constant)
