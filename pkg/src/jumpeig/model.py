"""Grid, jump-rate profile and jump measure on the unit interval.

All objects here are immutable once built: numpy arrays are marked read-only
so they can be shared freely between sweep workers.

Rate and measure presets are backed by exact polynomials, so endpoint
derivatives and normalizations are analytic. Tabulated user data is accepted
too; its endpoint derivatives then come from one-sided fourth-order
differences and it cannot be resampled onto another grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InvalidArgument, InvalidMeasure, InvalidRate

NORMALIZATION_TOL = 1e-8
# derivative orders stored at each endpoint for presets (0..K_MAX)
K_MAX = 6


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of (0, 1); ``nodes`` holds the interior points only."""

    n_interior: int
    h: float
    nodes: np.ndarray = field(repr=False)

    @property
    def full_nodes(self) -> np.ndarray:
        """Nodes including the two boundary points 0 and 1."""
        return np.concatenate(([0.0], self.nodes, [1.0]))

    def refined(self) -> "Grid":
        """Grid with exactly half the spacing."""
        return build_grid(2 * self.n_interior + 1)


def build_grid(n_interior: int) -> Grid:
    if int(n_interior) != n_interior or n_interior < 3:
        raise InvalidArgument(f"n_interior must be an integer >= 3, got {n_interior}")
    n = int(n_interior)
    h = 1.0 / (n + 1)
    nodes = np.arange(1, n + 1) * h
    return Grid(n, h, _frozen(nodes))


@dataclass(frozen=True)
class ScalarField:
    """Grid function with its two boundary values."""

    interior: np.ndarray
    left: float
    right: float

    @property
    def full(self) -> np.ndarray:
        return np.concatenate(([self.left], self.interior, [self.right]))

    def __len__(self):
        return len(self.interior)


# ---------------------------------------------------------------------------
# Rate field

@dataclass(frozen=True)
class RateField:
    """Jump intensity profile V, normalized so that its integral over (0,1) is 1.

    ``endpoint_derivs[b]`` holds (V'(b), V''(b)) for b = 0, 1.
    """

    grid: Grid = field(repr=False)
    values: np.ndarray = field(repr=False)
    endpoint_values: tuple[float, float]
    endpoint_derivs: tuple[tuple[float, float], tuple[float, float]]
    min_V: float
    max_V: float
    degenerate_ok: bool = False
    name: str = "tabulated"
    poly: Polynomial | None = field(default=None, repr=False)

    def __call__(self, x):
        """Evaluate V at arbitrary points of [0, 1]."""
        if self.poly is not None:
            return self.poly(np.asarray(x, dtype=float))
        return np.interp(x, self.grid.full_nodes, self.full_values)

    @property
    def full_values(self) -> np.ndarray:
        return np.concatenate(([self.endpoint_values[0]], self.values,
                               [self.endpoint_values[1]]))

    @property
    def is_degenerate(self) -> bool:
        return min(self.endpoint_values) <= 0.0

    def on(self, grid: Grid) -> "RateField":
        """Resample onto another grid (analytic presets only)."""
        if self.poly is None:
            raise InvalidArgument("tabulated rate field cannot be resampled")
        return _rate_from_poly(self.poly, grid, self.name, self.degenerate_ok)


def _poly_min_max(p: Polynomial) -> tuple[float, float]:
    cands = [0.0, 1.0]
    if p.degree() >= 2:
        for r in p.deriv().roots():
            if abs(r.imag) < 1e-12 and 0.0 < r.real < 1.0:
                cands.append(r.real)
    vals = p(np.array(cands))
    return float(vals.min()), float(vals.max())


def _rate_from_poly(p: Polynomial, grid: Grid, name: str,
                    degenerate_ok: bool) -> RateField:
    integral = float(p.integ()(1.0) - p.integ()(0.0))
    if abs(integral - 1.0) > NORMALIZATION_TOL:
        raise InvalidRate(f"rate integral is {integral!r}, must be 1")
    values = p(grid.nodes)
    if np.any(values <= 0.0):
        raise InvalidRate("rate must be positive at every interior node")
    v0, v1 = float(p(0.0)), float(p(1.0))
    if not degenerate_ok and min(v0, v1) <= 0.0:
        raise InvalidRate("rate must be positive at the endpoints")
    d1, d2 = p.deriv(1), p.deriv(2)
    lo, hi = _poly_min_max(p)
    return RateField(
        grid=grid,
        values=_frozen(values),
        endpoint_values=(v0, v1),
        endpoint_derivs=((float(d1(0.0)), float(d2(0.0))),
                         (float(d1(1.0)), float(d2(1.0)))),
        min_V=lo,
        max_V=hi,
        degenerate_ok=degenerate_ok,
        name=name,
        poly=p,
    )


RATE_PRESETS = ("constant", "linear", "polynomial", "degenerate")


def build_rate_field(preset: str, grid: Grid, *, slope: float = 0.0,
                     coeffs: Sequence[float] | None = None) -> RateField:
    """Build one of the analytic rate presets on ``grid``.

    Parameters
    ----------
    preset : {'constant', 'linear', 'polynomial', 'degenerate'}
        ``linear`` is ``1 + slope*(x - 1/2)`` with ``|slope| < 2``.
        ``polynomial`` takes power-basis ``coeffs`` and rescales them so the
        integral over (0, 1) is one. ``degenerate`` is ``6x(1-x)``, which
        vanishes at both endpoints.
    """
    if preset == "constant":
        p = Polynomial([1.0])
    elif preset == "linear":
        if not abs(slope) < 2.0:
            raise InvalidRate(f"linear slope must satisfy |slope| < 2, got {slope}")
        p = Polynomial([1.0 - 0.5 * slope, slope])
    elif preset == "polynomial":
        if coeffs is None or len(coeffs) == 0:
            raise InvalidRate("polynomial preset needs coefficients")
        p = Polynomial(np.asarray(coeffs, dtype=float))
        mass = float(p.integ()(1.0) - p.integ()(0.0))
        if mass <= 0.0:
            raise InvalidRate("polynomial rate has nonpositive integral")
        p = p / mass
    elif preset == "degenerate":
        return _rate_from_poly(Polynomial([0.0, 6.0, -6.0]), grid, "degenerate", True)
    else:
        raise InvalidRate(f"unknown rate preset {preset!r}; valid: {', '.join(RATE_PRESETS)}")
    name = preset if preset != "linear" else f"linear({slope:g})"
    return _rate_from_poly(p, grid, name, False)


def one_sided_derivatives(f: np.ndarray, h: float, orders: Sequence[int],
                          accuracy: int = 4) -> np.ndarray:
    """Derivatives at ``f[0]`` from forward differences of the given accuracy."""
    out = []
    for m in orders:
        if m == 0:
            out.append(float(f[0]))
            continue
        npts = m + accuracy
        if len(f) < npts:
            raise InvalidArgument(f"need {npts} samples for derivative order {m}")
        j = np.arange(npts, dtype=float)
        A = np.vander(j, npts, increasing=True).T  # A[p, j] = j**p
        rhs = np.zeros(npts)
        rhs[m] = math.factorial(m)
        w = np.linalg.solve(A, rhs)
        out.append(float(w @ f[:npts]) / h**m)
    return np.array(out)


def rate_field_from_values(full_values: Sequence[float], grid: Grid, *,
                           degenerate_ok: bool = False) -> RateField:
    """Rate field from tabulated values on ``grid.full_nodes``."""
    f = np.asarray(full_values, dtype=float)
    if f.shape != (grid.n_interior + 2,):
        raise InvalidRate("tabulated rate must have n_interior + 2 values")
    integral = float(np.trapezoid(f, dx=grid.h))
    if abs(integral - 1.0) > NORMALIZATION_TOL:
        raise InvalidRate(f"rate integral is {integral!r}, must be 1")
    if np.any(f[1:-1] <= 0.0):
        raise InvalidRate("rate must be positive at every interior node")
    if not degenerate_ok and min(f[0], f[-1]) <= 0.0:
        raise InvalidRate("rate must be positive at the endpoints")
    left = one_sided_derivatives(f, grid.h, (1, 2))
    right = one_sided_derivatives(f[::-1], grid.h, (1, 2)) * np.array([-1.0, 1.0])
    return RateField(
        grid=grid,
        values=_frozen(f[1:-1]),
        endpoint_values=(float(f[0]), float(f[-1])),
        endpoint_derivs=(tuple(left), tuple(right)),
        min_V=float(f.min()),
        max_V=float(f.max()),
        degenerate_ok=degenerate_ok,
    )


# ---------------------------------------------------------------------------
# Jump measure

@dataclass(frozen=True)
class JumpMeasure:
    """Probability measure on (0,1): an absolutely continuous part plus atoms.

    ``density`` is sampled on ``grid.full_nodes`` (endpoints included).
    ``density_endpoint_derivs[b, j]`` is the j-th derivative of the density at
    endpoint b. ``k_vanish`` is the boundary vanishing order of the density;
    ``math.inf`` marks a purely atomic (compactly supported) measure.
    """

    grid: Grid = field(repr=False)
    density: np.ndarray = field(repr=False)
    density_endpoint_derivs: np.ndarray = field(repr=False)
    atoms: tuple[tuple[float, float], ...]
    k_vanish: float
    density_mass: float
    name: str = "tabulated"
    poly: Polynomial | None = field(default=None, repr=False)
    spec: tuple = field(default=(), repr=False)

    @property
    def total_mass(self) -> float:
        return self.density_mass + sum(m for _, m in self.atoms)

    @property
    def is_atomic(self) -> bool:
        return math.isinf(self.k_vanish)

    def density_at(self, x):
        """Density of the absolutely continuous part at arbitrary points."""
        if self.poly is not None:
            return self.poly(np.asarray(x, dtype=float))
        return np.interp(x, self.grid.full_nodes, self.density)

    def on(self, grid: Grid) -> "JumpMeasure":
        if not self.spec:
            raise InvalidArgument("tabulated jump measure cannot be resampled")
        preset, kwargs = self.spec
        return build_jump_measure(preset, grid, **dict(kwargs))


JUMP_PRESETS = ("uniform", "poly", "atom", "mixture")


def _check_atom(loc: float) -> None:
    if not 0.0 < loc < 1.0:
        raise InvalidMeasure("atom location must lie in (0,1)")


def _component(preset: str, *, k: int = 0, location: float | None = None):
    """(density polynomial or None, atoms, k_vanish) for a unit-mass component."""
    if preset == "uniform":
        return Polynomial([1.0]), [], 0
    if preset == "poly":
        if int(k) != k or k < 0:
            raise InvalidMeasure(f"poly order must be a nonnegative integer, got {k}")
        k = int(k)
        # normalizing constant 1 / B(k+1, k+1)
        c = math.factorial(2 * k + 1) / math.factorial(k) ** 2
        return c * Polynomial([0.0, 1.0, -1.0]) ** k, [], k
    if preset == "atom":
        if location is None:
            raise InvalidMeasure("atom preset needs a location")
        _check_atom(location)
        return None, [(float(location), 1.0)], math.inf
    raise InvalidMeasure(f"unknown jump preset {preset!r}; valid: {', '.join(JUMP_PRESETS)}")


def build_jump_measure(preset: str, grid: Grid, *, k: int = 0,
                       location: float | None = None,
                       components: Sequence[dict] | None = None) -> JumpMeasure:
    """Build a jump-measure preset on ``grid``.

    ``poly`` with order ``k`` is the normalized ``x^k (1-x)^k``. ``mixture``
    takes ``components``, a list of dicts each holding a ``preset`` name, its
    parameters and a ``mass``; the masses must sum to one.
    """
    if preset == "mixture":
        if not components:
            raise InvalidMeasure("mixture needs at least one component")
        parts = []
        for comp in components:
            comp = dict(comp)
            mass = float(comp.pop("mass", float("nan")))
            sub = comp.pop("preset", None)
            if not mass > 0.0:
                raise InvalidMeasure("mixture component masses must be positive")
            if sub == "mixture":
                raise InvalidMeasure("nested mixtures are not supported")
            parts.append((mass, _component(sub, **comp)))
        total = sum(m for m, _ in parts)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidMeasure(f"mixture masses sum to {total!r}, must be 1")
        poly, atoms, kv = None, [], math.inf
        for mass, (p, a, kc) in parts:
            if p is not None:
                poly = mass * p if poly is None else poly + mass * p
                kv = min(kv, kc)
            atoms.extend((loc, mass * m) for loc, m in a)
        spec = ("mixture", (("components", tuple(tuple(sorted(c.items())) for c in components)),))
        name = "mixture"
    else:
        poly, atoms, kv = _component(preset, k=k, location=location)
        kwargs = {"uniform": (), "poly": (("k", k),), "atom": (("location", location),)}
        spec = (preset, kwargs.get(preset, ()))
        name = {"uniform": "uniform", "poly": f"poly({k})", "atom": f"atom({location:g})"
                if location is not None else "atom"}[preset]
    return _measure_from_parts(poly, atoms, kv, grid, name, spec)


def _measure_from_parts(poly, atoms, kv, grid, name, spec) -> JumpMeasure:
    if poly is None:
        density = np.zeros(grid.n_interior + 2)
        derivs = np.zeros((2, K_MAX + 1))
        dmass = 0.0
    else:
        density = poly(grid.full_nodes)
        # power-basis evaluation on [0, 1] is accurate to ~eps * sum|coef|
        tol = 64.0 * np.finfo(float).eps * float(np.sum(np.abs(poly.coef)))
        if np.any(density < -tol):
            raise InvalidMeasure("density must be nonnegative")
        density = np.maximum(density, 0.0)
        derivs = np.array([[poly.deriv(j)(b) if j else poly(b) for j in range(K_MAX + 1)]
                           for b in (0.0, 1.0)])
        # derivatives below the declared vanishing order are exactly zero
        if not math.isinf(kv):
            derivs[:, : int(kv)] = 0.0
        dmass = float(poly.integ()(1.0) - poly.integ()(0.0))
    total = dmass + sum(m for _, m in atoms)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidMeasure(f"total mass is {total!r}, must be 1")
    for loc, m in atoms:
        _check_atom(loc)
        if m <= 0.0:
            raise InvalidMeasure("atom masses must be positive")
    return JumpMeasure(
        grid=grid,
        density=_frozen(density),
        density_endpoint_derivs=_frozen(derivs),
        atoms=tuple((float(a), float(m)) for a, m in atoms),
        k_vanish=kv,
        density_mass=dmass,
        name=name,
        poly=poly,
        spec=spec,
    )


def jump_measure_from_density(full_density: Sequence[float], grid: Grid, *,
                              k_vanish: int,
                              atoms: Sequence[tuple[float, float]] = ()) -> JumpMeasure:
    """Jump measure from a density tabulated on ``grid.full_nodes`` plus atoms.

    The vanishing order must be declared; it is never inferred from the data.
    """
    f = np.asarray(full_density, dtype=float)
    if f.shape != (grid.n_interior + 2,):
        raise InvalidMeasure("tabulated density must have n_interior + 2 values")
    if np.any(f < 0.0):
        raise InvalidMeasure("density must be nonnegative")
    orders = range(min(K_MAX, 4) + 1)
    left = one_sided_derivatives(f, grid.h, orders)
    right = one_sided_derivatives(f[::-1], grid.h, orders) * (-1.0) ** np.arange(len(left))
    derivs = np.zeros((2, K_MAX + 1))
    derivs[0, : len(left)] = left
    derivs[1, : len(right)] = right
    derivs[:, : int(k_vanish)] = 0.0
    dmass = float(np.trapezoid(f, dx=grid.h))
    total = dmass + sum(m for _, m in atoms)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidMeasure(f"total mass is {total!r}, must be 1")
    for loc, m in atoms:
        _check_atom(loc)
    return JumpMeasure(
        grid=grid,
        density=_frozen(f),
        density_endpoint_derivs=_frozen(derivs),
        atoms=tuple((float(a), float(m)) for a, m in atoms),
        k_vanish=int(k_vanish),
        density_mass=dmass,
    )
