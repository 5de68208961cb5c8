"""Monte Carlo for Brownian motion on (0,1) with killing and random jumps.

While alive, the particle diffuses (``dX = dW``), is killed on reaching 0 or
1, and at rate ``gamma V(X)`` jumps to a fresh point drawn from ``mu``. The
clock is simulated by thinning: candidate events arrive at the constant rate
``gamma max V`` and are kept with probability ``V(x)/max V``, with ``x`` the
position at the start of the Euler step. Exits between grid times are caught
with the Brownian-bridge crossing probability ``exp(-2 d1 d2 / dt)``.

Every path owns a SplitMix64 stream whose state is derived from
``(seed, path_index)`` alone, so results do not depend on how paths are
batched or ordered.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numba as nb
import numpy as np

from .errors import InvalidArgument
from .model import JumpMeasure, RateField

TABLE_CELLS = 4096
DEFAULT_DT = 1e-4

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0
_BRIDGE_CUT = 19.0  # exp(-2 * 19) < 2**-54


@nb.njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@nb.njit(cache=True)
def _path_state(seed, index):
    s = _mix(np.uint64(seed) + _GOLDEN)
    return _mix(s ^ (np.uint64(index) * _STREAM + _GOLDEN))


@nb.njit(cache=True, inline="always")
def _uniform(state):
    """Advance ``state[0]`` and return a double in the open interval (0, 1)."""
    state[0] += _GOLDEN
    z = _mix(state[0])
    return (float(z >> _S11) + 0.5) * _TWO53


@nb.njit(cache=True, inline="always")
def _normal_pair(state):
    r = math.sqrt(-2.0 * math.log(_uniform(state)))
    a = 2.0 * math.pi * _uniform(state)
    return r * math.cos(a), r * math.sin(a)


@nb.njit(cache=True, inline="always")
def _table_eval(table, x):
    m = table.shape[0] - 1
    s = x * m
    j = int(s)
    if j >= m:
        return table[m]
    if j < 0:
        return table[0]
    f = s - j
    return table[j] * (1.0 - f) + table[j + 1] * f


@nb.njit(cache=True)
def _sample_jump(state, dens_mass, pdf, cdf, atom_locs, atom_cum):
    r = _uniform(state)
    if r < dens_mass or atom_locs.shape[0] == 0:
        q = _uniform(state)
        m = pdf.shape[0] - 1
        lo, hi = 0, m
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if cdf[mid] <= q:
                lo = mid
            else:
                hi = mid
        dx = 1.0 / m
        rem = q - cdf[lo]
        p0 = pdf[lo]
        slope = (pdf[lo + 1] - p0) / dx
        disc = p0 * p0 + 2.0 * slope * rem
        if disc < 0.0:
            disc = 0.0
        den = p0 + math.sqrt(disc)
        s = 2.0 * rem / den if den > 0.0 else 0.0
        if s > dx:
            s = dx
        x = lo * dx + s
        if x <= 0.0:
            x = 1e-12
        elif x >= 1.0:
            x = 1.0 - 1e-12
        return x
    for i in range(atom_locs.shape[0]):
        if r < atom_cum[i]:
            return atom_locs[i]
    return atom_locs[atom_locs.shape[0] - 1]


@nb.njit(cache=True)
def _bridge_hit(x, xn, dt):
    """Probability that a Brownian bridge from x to xn over dt leaves (0, 1)."""
    a = 2.0 * x * xn / dt
    b = 2.0 * (1.0 - x) * (1.0 - xn) / dt
    p0 = math.exp(-a) if a < 745.0 else 0.0
    p1 = math.exp(-b) if b < 745.0 else 0.0
    return 1.0 - (1.0 - p0) * (1.0 - p1)


@nb.njit(cache=True)
def _run_paths(seed, first_index, x0, t_max, dt, gamma, jumps_on, fk_on, lam_fk,
               bridge, vtab, vmax, dens_mass, pdf, cdf, atom_locs, atom_cum,
               exit_times, n_jumps, log_weights):
    n_paths = exit_times.shape[0]
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    sqdt = math.sqrt(dt)
    rate = gamma * vmax
    state = np.empty(1, dtype=np.uint64)
    for p in range(n_paths):
        state[0] = _path_state(seed, first_index + p)
        if x0 > 0.0:
            x = x0
        else:
            x = _sample_jump(state, dens_mass, pdf, cdf, atom_locs, atom_cum)
        if jumps_on and rate > 0.0:
            next_cand = -math.log(_uniform(state)) / rate
        else:
            next_cand = math.inf
        nj = 0
        logw = 0.0
        tau = math.inf
        spare = 0.0
        have_spare = False
        for k in range(n_steps):
            t = k * dt
            while next_cand < t + dt:
                if _uniform(state) * vmax < _table_eval(vtab, x):
                    x = _sample_jump(state, dens_mass, pdf, cdf, atom_locs, atom_cum)
                    nj += 1
                next_cand += -math.log(_uniform(state)) / rate
            if fk_on:
                logw += (lam_fk - gamma * _table_eval(vtab, x)) * dt
            if have_spare:
                z = spare
                have_spare = False
            else:
                z, spare = _normal_pair(state)
                have_spare = True
            xn = x + sqdt * z
            if xn <= 0.0 or xn >= 1.0:
                tau = (k + 1) * dt
                break
            # below 2**-54 the draw could never succeed, so skip it
            if bridge and (x * xn < _BRIDGE_CUT * dt or (1.0 - x) * (1.0 - xn) < _BRIDGE_CUT * dt):
                if _uniform(state) < _bridge_hit(x, xn, dt):
                    tau = (k + 1) * dt
                    break
            x = xn
        exit_times[p] = tau
        n_jumps[p] = nj
        log_weights[p] = logw


@nb.njit(cache=True)
def _clock_intervals(seed, n, vx, vmax, rate, out):
    """Accepted inter-event times of the thinned clock at a frozen position."""
    state = np.empty(1, dtype=np.uint64)
    state[0] = _path_state(seed, 0)
    t = 0.0
    last = 0.0
    i = 0
    while i < n:
        t += -math.log(_uniform(state)) / rate
        if _uniform(state) * vmax < vx:
            out[i] = t - last
            last = t
            i += 1


# ---------------------------------------------------------------------------
# python-side helpers

@dataclass(frozen=True)
class PathOutcome:
    exited: bool
    exit_time: float
    n_jumps: int
    fk_weight: float | None  # None unless a Feynman-Kac shift was requested


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n_paths: int
    seed: int


def _rate_table(V: RateField) -> np.ndarray:
    return np.ascontiguousarray(V(np.linspace(0.0, 1.0, TABLE_CELLS + 1)), dtype=float)


def _measure_tables(mu: JumpMeasure):
    xs = np.linspace(0.0, 1.0, TABLE_CELLS + 1)
    if mu.density_mass > 0.0:
        pdf = np.maximum(np.asarray(mu.density_at(xs), dtype=float), 0.0)
        cells = 0.5 * (pdf[1:] + pdf[:-1]) / TABLE_CELLS
        cdf = np.concatenate(([0.0], np.cumsum(cells)))
        pdf = pdf / cdf[-1]
        cdf = cdf / cdf[-1]
    else:
        pdf = np.zeros_like(xs)
        cdf = xs.copy()
    locs = np.array([a for a, _ in mu.atoms], dtype=float)
    cum = mu.density_mass + np.cumsum([m for _, m in mu.atoms]) if mu.atoms else np.zeros(0)
    return float(mu.density_mass), pdf, cdf, locs, np.asarray(cum, dtype=float)


def default_dt(gamma: float, V: RateField) -> float:
    """``1e-4`` for moderate rates; smaller when ``gamma max V`` is large."""
    rate = gamma * V.max_V
    return DEFAULT_DT if rate <= 100.0 else min(DEFAULT_DT, 1e-2 / rate)


def _check_seed(seed) -> int:
    if seed is None:
        raise InvalidArgument("a seed is required for Monte Carlo runs")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidArgument("seed must be an unsigned 64-bit integer")
    return seed


def _simulate(n_paths, seed, x0, t_max, dt, gamma, V, mu, *, jumps_on=True,
              fk_lambda=None, bridge=True, first_index=0):
    seed = _check_seed(seed)
    if x0 is not None and not 0.0 < x0 < 1.0:
        raise InvalidArgument("x0 must lie in (0, 1)")
    if not t_max >= 0.0:
        raise InvalidArgument("horizon must be nonnegative")
    if dt is None:
        dt = default_dt(gamma, V)
    if not 0.0 < dt <= 1e-3:
        raise InvalidArgument("dt must lie in (0, 1e-3]")
    exit_times = np.empty(n_paths)
    n_jumps = np.empty(n_paths, dtype=np.int64)
    logw = np.empty(n_paths)
    dmass, pdf, cdf, locs, cum = _measure_tables(mu)
    _run_paths(np.uint64(seed), np.uint64(first_index), -1.0 if x0 is None else float(x0),
               float(t_max), float(dt), float(gamma), bool(jumps_on), fk_lambda is not None,
               0.0 if fk_lambda is None else float(fk_lambda), bool(bridge),
               _rate_table(V), float(V.max_V), dmass, pdf, cdf, locs, cum,
               exit_times, n_jumps, logw)
    return exit_times, n_jumps, logw, dt


def sample_jump(mu: JumpMeasure, seed: int, size: int = 1) -> np.ndarray:
    """``size`` independent draws from ``mu``; draw i uses stream (seed, i)."""
    seed = _check_seed(seed)
    dmass, pdf, cdf, locs, cum = _measure_tables(mu)
    return _sample_many(np.uint64(seed), size, dmass, pdf, cdf, locs, cum)


@nb.njit(cache=True)
def _sample_many(seed, size, dmass, pdf, cdf, locs, cum):
    out = np.empty(size)
    state = np.empty(1, dtype=np.uint64)
    for i in range(size):
        state[0] = _path_state(seed, i)
        out[i] = _sample_jump(state, dmass, pdf, cdf, locs, cum)
    return out


def simulate_path(x0: float, gamma: float, V: RateField, mu: JumpMeasure,
                  horizon: float, dt: float | None = None, seed: int = 0,
                  path_index: int = 0, lam_for_fk: float | None = None) -> PathOutcome:
    """One path of the jump diffusion started at ``x0``."""
    tau, nj, logw, _ = _simulate(1, seed, x0, horizon, dt, gamma, V, mu,
                                 fk_lambda=lam_for_fk, first_index=path_index)
    exited = bool(np.isfinite(tau[0]))
    return PathOutcome(exited, float(tau[0]), int(nj[0]),
                       float(np.exp(logw[0])) if lam_for_fk is not None else None)


def _survival_from_times(exit_times, t, dt):
    return float(np.mean(exit_times > t + 0.5 * dt))


def survival_probability(gamma: float, V: RateField, mu: JumpMeasure, t: float,
                         n_paths: int, dt: float | None = None, seed: int | None = None,
                         x0: float | None = None, bridge: bool = True) -> MCEstimate:
    """Fraction of paths alive at time ``t``; ``x0=None`` starts from ``mu``."""
    if n_paths < 1000:
        raise InvalidArgument("n_paths must be at least 1000")
    seed = _check_seed(seed)
    if t == 0.0:
        return MCEstimate(1.0, 0.0, n_paths, seed)
    tau, _, _, dt = _simulate(n_paths, seed, x0, t, dt, gamma, V, mu, bridge=bridge)
    p = _survival_from_times(tau, t, dt)
    return MCEstimate(p, math.sqrt(p * (1.0 - p) / n_paths), n_paths, seed)


def survival_curve(gamma: float, V: RateField, mu: JumpMeasure, t_list: Sequence[float],
                   n_paths: int, dt: float | None = None, seed: int | None = None,
                   x0: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Survival fractions and their standard errors at each time, from one run."""
    t = np.asarray(t_list, dtype=float)
    if len(t) == 0 or np.any(t < 0):
        raise InvalidArgument("t_list must be nonempty and nonnegative")
    tau, _, _, dt = _simulate(n_paths, seed, x0, float(t.max()), dt, gamma, V, mu)
    p = np.array([_survival_from_times(tau, ti, dt) for ti in t])
    return p, np.sqrt(p * (1.0 - p) / n_paths)


@dataclass(frozen=True)
class DecayRate:
    rate: float
    r_squared: float
    t_used: np.ndarray
    survival: np.ndarray
    n_paths: int
    seed: int


def fit_decay_rate(t_list, survival) -> tuple[float, float]:
    """Slope of ``log survival`` against ``t`` (returned as a positive rate)."""
    t = np.asarray(t_list, dtype=float)
    s = np.asarray(survival, dtype=float)
    if len(t) < 2 or np.any(s <= 0):
        raise InvalidArgument("need >= 2 positive survival values")
    ls = np.log(s)
    slope, icpt = np.polyfit(t, ls, 1)
    ss_tot = float(np.sum((ls - ls.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ls - slope * t - icpt) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r2


def decay_rate_estimate(gamma: float, V: RateField, mu: JumpMeasure,
                        t_list: Sequence[float], n_paths: int,
                        dt: float | None = None, seed: int | None = None,
                        x0: float | None = None) -> DecayRate:
    """Exponential decay rate of the survival probability.

    All times come from one simulation up to ``max(t_list)``. Times whose
    survivor count is below 10 are dropped with a warning.
    """
    t = np.asarray(t_list, dtype=float)
    if len(t) < 3 or np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise InvalidArgument("t_list must be >= 3 increasing positive times")
    surv, _ = survival_curve(gamma, V, mu, t, n_paths, dt, seed, x0)
    seed = int(seed)
    keep = surv * n_paths >= 10
    if not keep.all():
        warnings.warn(f"dropping times {t[~keep].tolist()} with fewer than 10 survivors")
        t, surv = t[keep], surv[keep]
    if len(t) < 2:
        raise InvalidArgument("fewer than 2 usable times remain")
    rate, r2 = fit_decay_rate(t, surv)
    return DecayRate(rate, r2, t, surv, n_paths, seed)


def fk_estimate_u(x0: float, lam: float, gamma: float, V: RateField, n_paths: int,
                  dt: float | None = None, seed: int | None = None,
                  horizon: float = 5.0) -> MCEstimate:
    """Mean of ``exp(int_0^tau (lam - gamma V(X_s)) ds)`` over killed Brownian paths.

    The jump clock is off. Paths still alive at ``horizon`` contribute their
    weight at that time.
    """
    seed = _check_seed(seed)
    from .model import build_grid, build_jump_measure
    mu = build_jump_measure("uniform", build_grid(3))  # unused: jumps are off
    _, _, logw, _ = _simulate(n_paths, seed, x0, horizon, dt, gamma, V, mu,
                              jumps_on=False, fk_lambda=lam)
    w = np.exp(logw)
    return MCEstimate(float(w.mean()), float(w.std(ddof=1) / math.sqrt(n_paths)), n_paths, seed)


def jump_clock_intervals(x: float, gamma: float, V: RateField, n: int, seed: int) -> np.ndarray:
    """Inter-jump times of the thinned clock with the particle frozen at ``x``."""
    seed = _check_seed(seed)
    out = np.empty(n)
    _clock_intervals(np.uint64(seed), n, float(V(x)), float(V.max_V), gamma * V.max_V, out)
    return out
