"""Rate vanishing at the boundary: V(x) = 6x(1-x) with Lebesgue jump measure.

Only the two-sided power bounds ``gamma**(1/3) <~ lambda0 <~ gamma**(2/3)``
are known for this case. The sweep here reports an empirical growth exponent
as exploratory output; it is not a reference value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .asym import SweepResult, fit_power_law, sweep_gamma
from .eigen import quadrature_weights
from .errors import InvalidArgument
from .model import Grid, ScalarField, build_grid, build_jump_measure, build_rate_field

PROVEN_WINDOW = (1.0 / 3.0, 2.0 / 3.0)
SLOPE_SLACK = 0.05


@dataclass
class DegenerateSweep:
    sweep: SweepResult
    local_slopes: np.ndarray
    slopes_in_window: bool
    window: tuple[float, float]

    @property
    def fitted_exponent(self) -> float:
        return self.sweep.fit_exponent


def degenerate_problem(grid: Grid):
    return build_rate_field("degenerate", grid), build_jump_measure("uniform", grid)


def degenerate_sweep(gammas: Sequence[float], n_min: int = 2000,
                     nodes_per_layer: float = 100.0, richardson: bool = True,
                     slack: float = SLOPE_SLACK) -> DegenerateSweep:
    """Matrix-route sweep on grids resolving the ``gamma**(-1/3)`` layer."""
    V, mu = degenerate_problem(build_grid(n_min))
    sw = sweep_gamma(gammas, V, mu, method="matrix", richardson=richardson,
                     k=0, n_min=n_min, nodes_per_layer=nodes_per_layer,
                     layer_power=1.0 / 3.0)
    ok = (sw.gammas > 0) & (sw.lambda0s > 0)
    g, lam = sw.gammas[ok], sw.lambda0s[ok]
    if len(g) >= 3:
        slopes = fit_power_law(g, lam).local_slopes
    elif len(g) == 2:
        slopes = np.diff(np.log(lam)) / np.diff(np.log(g))
    else:
        slopes = np.array([])
    lo, hi = PROVEN_WINDOW[0] - slack, PROVEN_WINDOW[1] + slack
    inside = bool(np.all((slopes >= lo) & (slopes <= hi)))
    return DegenerateSweep(sw, slopes, inside, (lo, hi))


def _junction(gamma: float) -> float:
    return 0.5 * gamma ** (-1.0 / 3.0)


def paper_test_function(gamma: float, grid: Grid) -> ScalarField:
    """``x - gamma**(1/3) x**2`` up to ``a = gamma**(-1/3)/2``, flat up to 1/2,
    mirrored about 1/2. C^1 with a jump in the second derivative at a, 1-a."""
    if gamma < 8.0:
        raise InvalidArgument("test function needs gamma >= 8")
    g3 = gamma ** (1.0 / 3.0)
    a = _junction(gamma)
    d = np.minimum(grid.nodes, 1.0 - grid.nodes)
    u = np.where(d < a, d - g3 * d * d, a - g3 * a * a)
    return ScalarField(u, 0.0, 0.0)


def _test_function_second_derivative(gamma: float, x: np.ndarray) -> np.ndarray:
    a = _junction(gamma)
    d = np.minimum(x, 1.0 - x)
    return np.where(d < a, -2.0 * gamma ** (1.0 / 3.0), 0.0)


@dataclass
class SupersolutionReport:
    gamma: float
    c: float
    sign: str
    extreme_residual: float
    at: float
    holds: bool
    integral: float


def supersolution_check(gamma: float, c: float, sign: str = ">=0",
                        grid: Grid | None = None) -> SupersolutionReport:
    """Evaluate ``R = L u - c u`` for the piecewise test function at grid nodes.

    ``L u = -u''/2 + gamma V (u - int u dx)`` with the exact piecewise second
    derivative; the node closest to each junction is skipped because ``u''``
    jumps there. ``sign='>=0'`` reports ``min R``; ``sign='<=0'`` reports
    ``max R``.
    """
    if sign not in (">=0", "<=0"):
        raise InvalidArgument("sign must be '>=0' or '<=0'")
    if grid is None:
        grid = build_grid(max(2000, int(math.ceil(100.0 * gamma ** (1.0 / 3.0)))))
    V, mu = degenerate_problem(grid)
    u = paper_test_function(gamma, grid)
    integral = float(quadrature_weights(mu, grid) @ u.full)
    x = grid.nodes
    R = (-0.5 * _test_function_second_derivative(gamma, x)
         + gamma * V.values * (u.interior - integral) - c * u.interior)
    a = _junction(gamma)
    keep = np.ones(len(x), dtype=bool)
    keep[np.argmin(np.abs(x - a))] = False
    keep[np.argmin(np.abs(x - (1.0 - a)))] = False
    idx = np.flatnonzero(keep)
    if sign == ">=0":
        j = idx[np.argmin(R[idx])]
        holds = bool(R[j] >= 0.0)
    else:
        j = idx[np.argmax(R[idx])]
        holds = bool(R[j] <= 0.0)
    return SupersolutionReport(gamma, c, sign, float(R[j]), float(x[j]), holds, integral)


def bound_certificate(sweep: SweepResult) -> tuple[float, float]:
    """``(min lambda0 gamma**-1/3, max lambda0 gamma**-2/3)`` over the sweep."""
    ok = sweep.gammas > 0
    if not ok.any():
        raise InvalidArgument("sweep has no positive gamma")
    g, lam = sweep.gammas[ok], sweep.lambda0s[ok]
    return float(np.min(lam * g ** (-1.0 / 3.0))), float(np.max(lam * g ** (-2.0 / 3.0)))
