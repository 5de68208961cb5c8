# The process behind the operator, simulated
#
# Brownian motion killed at 0 and 1 that jumps at rate gamma V(x) to a point
# drawn from mu. Its survival probability decays like exp(-lambda0 t).

import math

import numpy as np

from jumpeig import build_grid, build_jump_measure, build_rate_field, principal_eigenvalue
from jumpeig import mc

grid = build_grid(2000)
V = build_rate_field("constant", grid)
mu = build_jump_measure("uniform", grid)

# No jumps: the survival probability has an eigenfunction series.

k = np.arange(1, 400, 2)
exact = np.sum(4 / (k * np.pi) * np.sin(k * np.pi / 2) * np.exp(-k**2 * np.pi**2 / 2))
est = mc.survival_probability(0.0, V, mu, 1.0, 200_000, 1e-4, seed=1, x0=0.5)
print(f"gamma=0, x0=1/2, t=1: {est.value:.5f} +- {est.std_error:.5f}   series {exact:.5f}")

# With jumps: decay rate from a single simulation, compared with the PDE.

gamma = 50.0
d = mc.decay_rate_estimate(gamma, V, mu, np.linspace(0.1, 0.6, 6), 100_000, seed=2)
lam = principal_eigenvalue(gamma, V, mu, grid).lambda0
print(f"\ngamma={gamma:g}: survival " + " ".join(f"{p:.4f}" for p in d.survival))
print(f"decay rate {d.rate:.3f} (r2 {d.r_squared:.4f});  lambda0 from the PDE {lam:.3f}")

# Feynman-Kac: u(x) = E_x exp(-gamma tau) for the Brownian exit time tau.

for x in (0.25, 0.5):
    fk = mc.fk_estimate_u(x, 0.0, 2.0, V, 50_000, seed=3)
    exact_u = math.cosh(2 * (x - 0.5)) / math.cosh(1.0)
    print(f"u({x}) at gamma=2: MC {fk.value:.4f} +- {fk.std_error:.4f}   exact {exact_u:.4f}")
