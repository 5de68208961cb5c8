# Jumps to a single point: lambda0 becomes exponentially small
#
# If every jump lands at x = 1/2, the particle is re-centred at rate gamma
# and the exit rate decays like exp(-c sqrt(gamma)). For V = 1 the leading
# behaviour is 2 gamma exp(-sqrt(gamma/2)).

import math

import numpy as np

from jumpeig import build_grid, build_jump_measure, build_rate_field, sweep_gamma
from jumpeig.asym import exponential_decay_fit

grid = build_grid(2000)
V = build_rate_field("constant", grid)
atom = build_jump_measure("atom", grid, location=0.5)
gammas = [100.0, 400.0, 900.0, 1600.0]

sw = sweep_gamma(gammas, V, atom, richardson=False)
for g, lam in zip(sw.gammas, sw.lambda0s):
    print(f"gamma={g:6g}  lambda0={lam:.6e}  2 gamma exp(-sqrt(gamma/2))={2 * g * math.exp(-math.sqrt(g / 2)):.6e}")

# The plain regression of log lambda0 on sqrt(gamma) absorbs the log(2 gamma)
# prefactor into the slope, so over this range it reads about 0.62 instead of
# 1/sqrt(2). Dividing the prefactor out recovers the exponent.

plain = exponential_decay_fit(sw.gammas, sw.lambda0s)
fixed = exponential_decay_fit(sw.gammas, sw.lambda0s, prefactor_power=1.0)
print(f"\nplain fit:            c_hat={plain.c_hat:.4f}  r2={plain.r_squared:.5f}")
print(f"gamma prefactor out:  c_hat={fixed.c_hat:.4f}  r2={fixed.r_squared:.6f}"
      f"  exp(intercept)={np.exp(fixed.log_prefactor):.3f}")
print(f"1/sqrt(2) = {1 / math.sqrt(2):.4f}")
