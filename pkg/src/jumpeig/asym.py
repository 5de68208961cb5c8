"""Large-gamma behaviour: limit constants, gamma sweeps and fits.

For a jump density whose derivatives of order < k vanish at both endpoints,
``gamma**((k-1)/2) * lambda0`` tends to

    sum_b V(b)**(-(k+1)/2) * T_k(b)  /  (2**((k+1)/2) * int (1/V) dmu)

on (0, 1), where ``T_k(b)`` is the k-th derivative of the density at b, taken
along the inward normal when k is odd (so the sign flips at b = 1).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from . import bvp, eigen
from .errors import InvalidArgument, OutOfHypothesis
from .model import Grid, JumpMeasure, RateField, build_grid


def inverse_rate_integral(V: RateField, mu: JumpMeasure) -> float:
    """``int (1/V) dmu`` (adaptive quadrature on the density, exact on atoms)."""
    total = sum(m / float(V(a)) for a, m in mu.atoms)
    if mu.density_mass > 0.0:
        if mu.poly is not None and V.poly is not None:
            val, _ = integrate.quad(lambda x: mu.density_at(x) / V(x), 0.0, 1.0,
                                    epsabs=1e-13, epsrel=1e-12, limit=200)
        else:
            x = mu.grid.full_nodes
            val = float(np.trapezoid(mu.density / V(x), x))
        total += val
    return total


def theoretical_limit_constant(k: int, V: RateField, mu: JumpMeasure) -> float:
    if V.is_degenerate:
        raise OutOfHypothesis("limit constant needs V > 0 at both endpoints")
    if mu.density_mass == 0.0:
        raise InvalidArgument("measure has no density part near the boundary")
    if k != mu.k_vanish:
        raise InvalidArgument(f"k={k} inconsistent with declared vanishing order {mu.k_vanish}")
    if k >= mu.density_endpoint_derivs.shape[1]:
        raise InvalidArgument(f"endpoint derivatives of order {k} not available")
    d = mu.density_endpoint_derivs
    tk = (d[0, k], -d[1, k] if k % 2 else d[1, k])
    p = -(k + 1) / 2.0
    num = sum(vb ** p * t for vb, t in zip(V.endpoint_values, tk))
    return num / (2.0 ** ((k + 1) / 2.0) * inverse_rate_integral(V, mu))


# ---------------------------------------------------------------------------
# fits

class PowerLawFit(NamedTuple):
    exponent: float
    constant: float
    residual: float
    local_slopes: np.ndarray


def _positive(name, a):
    a = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a <= 0.0):
        raise InvalidArgument(f"{name} must be finite and positive")
    return a


def fit_power_law(gammas, lambdas) -> PowerLawFit:
    """Least squares of ``log lambda`` on ``log gamma``."""
    g = _positive("gammas", gammas)
    lam = _positive("lambdas", lambdas)
    if len(g) < 3 or len(g) != len(lam):
        raise InvalidArgument("need at least 3 matching points")
    lg, ll = np.log(g), np.log(lam)
    slope, icpt = np.polyfit(lg, ll, 1)
    resid = float(np.max(np.abs(ll - (slope * lg + icpt))))
    return PowerLawFit(float(slope), float(math.exp(icpt)), resid, np.diff(ll) / np.diff(lg))


class DecayFit(NamedTuple):
    c_hat: float
    r_squared: float
    log_prefactor: float


def exponential_decay_fit(gammas, lambdas, prefactor_power: float = 0.0) -> DecayFit:
    """Regress ``log lambda`` on ``sqrt(gamma)``; ``c_hat`` is minus the slope.

    With ``prefactor_power = p`` the regressand is ``log(lambda / gamma**p)``,
    which removes a known algebraic prefactor. Over moderate ranges such a
    prefactor shifts the plain slope noticeably (for ``2 gamma exp(-c sqrt
    gamma)`` by about ``2/sqrt(gamma)``).
    """
    g = _positive("gammas", gammas)
    lam = _positive("lambdas", lambdas)
    if len(g) < 4 or len(g) != len(lam):
        raise InvalidArgument("need at least 4 matching points")
    s, ll = np.sqrt(g), np.log(lam) - prefactor_power * np.log(g)
    slope, icpt = np.polyfit(s, ll, 1)
    ss_res = float(np.sum((ll - (slope * s + icpt)) ** 2))
    ss_tot = float(np.sum((ll - ll.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), r2, float(icpt))


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class SweepResult:
    gammas: np.ndarray
    lambda0s: np.ndarray
    k: float
    scaled: np.ndarray
    fit_exponent: float = float("nan")
    fit_constant: float = float("nan")
    limit_constant: float | None = None
    extrapolated_intercept: float = float("nan")
    # per-point diagnostics (coarse-grid eigenvalue and solver bookkeeping)
    h: np.ndarray = field(default=None, repr=False)
    lambda0_coarse: np.ndarray = field(default=None, repr=False)
    method: list = field(default=None, repr=False)
    iterations: np.ndarray = field(default=None, repr=False)
    residual: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.gammas = np.asarray(self.gammas, dtype=float)
        self.lambda0s = np.asarray(self.lambda0s, dtype=float)
        self.scaled = np.asarray(self.scaled, dtype=float)
        n = len(self.gammas)
        if len(self.lambda0s) != n or len(self.scaled) != n:
            raise InvalidArgument("sweep columns must have equal length")
        if n > 1 and np.any(np.diff(self.gammas) <= 0):
            raise InvalidArgument("gammas must be strictly increasing")
        if self.h is None:
            self.h = np.full(n, np.nan)
        if self.lambda0_coarse is None:
            self.lambda0_coarse = self.lambda0s.copy()
        if self.method is None:
            self.method = [""] * n
        if self.iterations is None:
            self.iterations = np.zeros(n, dtype=int)
        if self.residual is None:
            self.residual = np.zeros(n)

    def __len__(self):
        return len(self.gammas)

    def rows(self):
        """Tabular view in the sweep CSV column order."""
        for i in range(len(self)):
            yield {
                "gamma": float(self.gammas[i]),
                "h": float(self.h[i]),
                "lambda0": float(self.lambda0_coarse[i]),
                "lambda0_richardson": float(self.lambda0s[i]),
                "scaled": float(self.scaled[i]),
                "k": self.k,
                "method": self.method[i],
                "iterations": int(self.iterations[i]),
                "residual": float(self.residual[i]),
            }


def scaling_power(k: float) -> float:
    return (k - 1.0) / 2.0


def scale_column(gammas, lambdas, k: float) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    if math.isinf(k):
        return np.full(len(g), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = g ** scaling_power(k) * lam
    out[~np.isfinite(out)] = np.nan
    return out


def grid_for_gamma(gamma: float, n_min: int = 2000, nodes_per_layer: float = 40.0,
                   layer_power: float = 0.5) -> Grid:
    """Grid resolving a boundary layer of width ``gamma**-layer_power``."""
    n = max(int(n_min), int(math.ceil(nodes_per_layer * gamma ** layer_power)))
    return build_grid(n)


def _solve_point(gamma, V, mu, grid, method, use_richardson, rel_tol):
    try:
        if use_richardson:
            rr = eigen.principal_eigenvalue_richardson(gamma, V, mu, grid, method, rel_tol)
            res = rr.coarse
            value = rr.value
            iters = rr.coarse.iterations + rr.fine.iterations
            resid = max(rr.coarse.residual, rr.fine.residual)
        else:
            res = eigen.principal_eigenvalue(gamma, V.on(grid), mu.on(grid), grid,
                                             method, rel_tol)
            value, iters, resid = res.lambda0, res.iterations, res.residual
    except Exception as exc:
        raise type(exc)(f"gamma={gamma:g}: {exc}") from exc
    return grid.h, res.lambda0, value, res.method, iters, resid


def sweep_gamma(gammas: Sequence[float], V: RateField, mu: JumpMeasure,
                grid: Grid | None = None, method: str = "auto", *,
                richardson: bool = True, k: float | None = None,
                n_min: int = 2000, nodes_per_layer: float = 40.0,
                layer_power: float = 0.5, rel_tol: float = 1e-12,
                workers: int | None = None) -> SweepResult:
    """Principal eigenvalue over a list of couplings.

    Each point gets its own grid with at least ``nodes_per_layer`` nodes
    across the ``gamma**-layer_power`` boundary layer (and never fewer than
    ``n_min`` or ``grid.n_interior``). With ``richardson`` the reported value
    combines that grid and the one with half the spacing.
    """
    g = np.asarray(list(gammas), dtype=float)
    if k is None:
        k = mu.k_vanish
    if len(g) == 0:
        return SweepResult(g, np.array([]), k, np.array([]))
    if np.any(np.diff(g) <= 0):
        raise InvalidArgument("gammas must be strictly increasing")
    if np.any(g < 0) or np.any(g > bvp.GAMMA_MAX):
        raise InvalidArgument(f"gammas must lie in [0, {bvp.GAMMA_MAX:g}]")
    if grid is not None:
        n_min = max(n_min, grid.n_interior)

    def task(gam):
        gr = grid_for_gamma(gam, n_min, nodes_per_layer, layer_power)
        return _solve_point(gam, V, mu, gr, method, richardson, rel_tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            points = list(ex.map(task, g))
    else:
        points = [task(gam) for gam in g]
    hs, coarse, vals, meths, its, res = map(list, zip(*points))
    vals = np.array(vals)
    out = SweepResult(g, vals, k, scale_column(g, vals, k), h=np.array(hs),
                      lambda0_coarse=np.array(coarse), method=meths,
                      iterations=np.array(its), residual=np.array(res))
    _attach_fits(out, V, mu)
    return out


def _attach_fits(sweep: SweepResult, V: RateField, mu: JumpMeasure) -> None:
    ok = (sweep.gammas > 0) & (sweep.lambda0s > 0)
    if ok.sum() >= 3:
        fit = fit_power_law(sweep.gammas[ok], sweep.lambda0s[ok])
        sweep.fit_exponent, sweep.fit_constant = fit.exponent, fit.constant
    try:
        sweep.limit_constant = theoretical_limit_constant(int(sweep.k), V, mu) \
            if not math.isinf(sweep.k) else None
    except InvalidArgument:
        sweep.limit_constant = None
    if np.isfinite(sweep.scaled).sum() >= 3:
        try:
            sweep.extrapolated_intercept = fit_corrected_limit(sweep)
        except InvalidArgument:
            pass


def fit_corrected_limit(sweep: SweepResult) -> float:
    """Intercept ``c`` of the least-squares model ``scaled = c + a/sqrt(gamma)``."""
    ok = np.isfinite(sweep.scaled) & (sweep.gammas > 0)
    g, s = sweep.gammas[ok], sweep.scaled[ok]
    if len(g) < 3:
        raise InvalidArgument("need at least 3 finite points")
    X = np.column_stack((np.ones(len(g)), g ** -0.5))
    if np.linalg.matrix_rank(X) < 2:
        raise InvalidArgument("degenerate design matrix")
    coef, *_ = np.linalg.lstsq(X, s, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# lemma diagnostics

@dataclass
class LemmaDiagnostics:
    gamma: float
    lambda0: float
    v_limit_sup: float
    normal_deriv_errs: tuple[float, float]
    sublinearity_ratio: float


def lemma_diagnostics(gamma: float, V: RateField, mu: JumpMeasure, grid: Grid,
                      epsilon: float = 0.1) -> LemmaDiagnostics:
    """Finite-gamma distance from the three limit statements.

    * sup over nodes in [epsilon, 1-epsilon] of ``|gamma v - 1/V|``
      (the convergence is only pointwise, so the sup stays off the boundary);
    * ``|gamma**-1/2 * du/dn(b) + sqrt(2 V(b))|`` at b = 0 and 1;
    * ``lambda0 / gamma``.
    """
    if not 0.0 < epsilon < 0.5:
        raise InvalidArgument("epsilon must lie in (0, 1/2)")
    res = eigen.principal_eigenvalue_fixed_point(gamma, V, mu, grid)
    x = grid.nodes
    inner = (x >= epsilon - 1e-12) & (x <= 1.0 - epsilon + 1e-12)
    vsup = float(np.max(np.abs(gamma * res.v_profile.interior[inner] - 1.0 / V.values[inner])))
    d0, d1 = bvp.boundary_normal_derivative(res.u_profile, grid)
    errs = tuple(abs(d / math.sqrt(gamma) + math.sqrt(2.0 * vb))
                 for d, vb in zip((d0, d1), V.endpoint_values))
    return LemmaDiagnostics(gamma, res.lambda0, vsup, errs, res.lambda0 / gamma)
