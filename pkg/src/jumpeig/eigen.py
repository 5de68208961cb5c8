"""Principal eigenvalue of the non-local operator by two independent routes.

Route 1 (``fixed_point``) finds the smallest positive root of

    G(lam) = int u_lam dmu / int v_lam dmu - lam

with ``u_lam``, ``v_lam`` from :mod:`jumpeig.bvp`. Route 2 (``matrix``) runs
shifted inverse iteration on the discretized operator

    A = T0 - c w^T,   c = gamma*V(x_i),  w = interior quadrature row of mu,

applying ``(A - s)^{-1}`` through a tridiagonal factorization and a
Sherman-Morrison correction. On the same grid both routes solve the same
discrete problem: with ``w_lam = 1 - u_lam + lam v_lam`` one has
``(T0 - lam) w_lam = c`` exactly, so a root of ``G`` is an eigenvalue of ``A``
as long as the full quadrature row sums to one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, lapack

from . import bvp
from .errors import (ComplexEigenvalueSuspected, InvalidArgument, NoRootFound,
                     NonConvergence, SingularSystem)
from .model import Grid, JumpMeasure, RateField, ScalarField

SCAN_STEPS = 64
SCAN_FRACTION = 0.999
BISECTION_CAP = 200
INVERSE_ITERATION_CAP = 500
WEIGHT_SUM_TOL = 1e-10


@dataclass
class EigenResult:
    lambda0: float
    u_profile: ScalarField | None = field(repr=False)
    v_profile: ScalarField | None = field(repr=False)
    method: str
    iterations: int
    residual: float
    lambda_star: float
    h: float = float("nan")


@dataclass(frozen=True)
class NonlocalOperator:
    """``A = T0 - c w^T`` with ``w`` the full (n+2) quadrature row.

    Boundary entries of ``w`` act on the Dirichlet values, which are zero
    for eigenvectors, so only ``w[1:-1]`` enters the matrix.
    """

    T: bvp.TridiagonalOperator
    c: np.ndarray
    w: np.ndarray

    @property
    def w_interior(self) -> np.ndarray:
        return self.w[1:-1]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.T.matvec(x) - self.c * (self.w_interior @ x)

    def dense(self) -> np.ndarray:
        n = len(self.c)
        A = np.diag(self.T.diag) + np.diag(self.T.sub, -1) + np.diag(self.T.sup, 1)
        return A - np.outer(self.c, self.w_interior) if n else A

    def reflected(self) -> "NonlocalOperator":
        """Same operator after relabeling x -> 1 - x."""
        T = bvp.TridiagonalOperator(self.T.sup[::-1].copy(), self.T.diag[::-1].copy(),
                                    self.T.sub[::-1].copy(), self.T.h)
        return NonlocalOperator(T, self.c[::-1].copy(), self.w[::-1].copy())


def quadrature_weights(mu: JumpMeasure, grid: Grid) -> np.ndarray:
    """Weights on ``grid.full_nodes`` such that ``w @ f_full ~ int f dmu``.

    Density part: trapezoid rule rescaled so it reproduces the density's
    exact mass. Atoms: linear interpolation between the two neighbouring
    nodes (boundary nodes included).
    """
    n = grid.n_interior
    w = np.zeros(n + 2)
    if mu.density_mass > 0.0:
        dens = mu.density if len(mu.density) == n + 2 else mu.density_at(grid.full_nodes)
        trap = grid.h * dens.copy()
        trap[0] *= 0.5
        trap[-1] *= 0.5
        s = trap.sum()
        if s > 0.0:
            w += trap * (mu.density_mass / s)
    for loc, mass in mu.atoms:
        t = loc / grid.h
        j = min(int(math.floor(t)), n)
        theta = t - j
        if theta < 1e-12:
            theta = 0.0
        elif theta > 1.0 - 1e-12:
            j, theta = j + 1, 0.0
        w[j] += mass * (1.0 - theta)
        if theta:
            w[j + 1] += mass * theta
    return w


def build_operator(gamma: float, V: RateField, mu: JumpMeasure, grid: Grid) -> NonlocalOperator:
    w = quadrature_weights(mu, grid)
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidArgument(f"quadrature weights sum to {w.sum()!r}")
    return NonlocalOperator(bvp.assemble(0.0, gamma, V, grid), gamma * V.values, w)


def base_dirichlet_eigenvalue(gamma: float, V: RateField, grid: Grid) -> float:
    """Smallest eigenvalue of ``-1/2 D2_h + gamma V`` (no jump term)."""
    T = bvp.assemble(0.0, gamma, V, grid)
    ev = eigh_tridiagonal(T.diag, T.sub, eigvals_only=True,
                          select="i", select_range=(0, 0))
    return float(ev[0])


class _FixedPointMap:
    """Evaluates F(lam) = int u dmu / int v dmu on one grid."""

    def __init__(self, gamma, V, mu, grid):
        bvp._check_gamma(gamma)
        self.grid = grid
        self.w = quadrature_weights(mu, grid)
        h2 = grid.h * grid.h
        self.base = 1.0 / h2 + gamma * V.values
        self.off = np.full(grid.n_interior - 1, -0.5 / h2)
        rhs = np.zeros((grid.n_interior, 2))
        rhs[0, 0] = rhs[-1, 0] = 0.5 / h2
        rhs[:, 1] = 1.0
        self.rhs = rhs

    def __call__(self, lam):
        x = bvp.solve_symmetric_tridiagonal(self.base - lam, self.off, self.rhs)
        wi = self.w[1:-1]
        iu = self.w[0] + self.w[-1] + wi @ x[:, 0]
        iv = wi @ x[:, 1]
        return iu / iv, x[:, 0], x[:, 1]


def fixed_point_residual(lam: float, gamma: float, V: RateField, mu: JumpMeasure,
                         grid: Grid) -> float:
    """``G(lam) = F(lam) - lam``; raises SingularSystem past the guard value."""
    F, _, _ = _FixedPointMap(gamma, V, mu, grid)(lam)
    return F - lam


def _check_tol(rel_tol):
    if not 1e-14 < rel_tol < 1e-2:
        raise InvalidArgument(f"rel_tol must lie in (1e-14, 1e-2), got {rel_tol}")


def principal_eigenvalue_fixed_point(gamma: float, V: RateField, mu: JumpMeasure,
                                     grid: Grid, rel_tol: float = 1e-12) -> EigenResult:
    """Smallest positive root of G by a 64-step bracket scan and bisection.

    ``gamma = 0`` has no root below the guard value (the operator reduces to
    the Dirichlet Laplacian); that case is delegated to the matrix route.
    """
    _check_tol(rel_tol)
    if gamma == 0.0:
        return principal_eigenvalue_matrix(gamma, V, mu, grid, rel_tol)
    lam_star = base_dirichlet_eigenvalue(gamma, V, grid)
    Fmap = _FixedPointMap(gamma, V, mu, grid)
    top = SCAN_FRACTION * lam_star
    lo, g_lo = 0.0, Fmap(0.0)[0]
    if not g_lo > 0.0:
        raise NoRootFound(f"G(0) = {g_lo!r} is not positive")
    hi = None
    for j in range(1, SCAN_STEPS + 1):
        lam = top * j / SCAN_STEPS
        g = Fmap(lam)[0] - lam
        if g <= 0.0:
            hi = lam
            break
        lo = lam
    if hi is None:
        raise NoRootFound(f"no sign change of G in (0, {top:.6g}) at gamma={gamma}")
    it = 0
    while hi - lo > rel_tol * hi:
        it += 1
        if it > BISECTION_CAP:
            raise NonConvergence(f"bisection did not converge at gamma={gamma}")
        mid = 0.5 * (lo + hi)
        if Fmap(mid)[0] - mid > 0.0:
            lo = mid
        else:
            hi = mid
    lam0 = 0.5 * (lo + hi)
    F, u, v = Fmap(lam0)
    return EigenResult(lam0, ScalarField(u, 1.0, 1.0), ScalarField(v, 0.0, 0.0),
                       "fixed_point", it, abs(F - lam0), lam_star, grid.h)


def _shifted_solve(op: NonlocalOperator, sigma: float, x: np.ndarray, z_cache: dict):
    """``(A - sigma)^{-1} x`` via Sherman-Morrison on the tridiagonal part."""
    d = op.T.diag - sigma
    if sigma not in z_cache:
        z_cache.clear()
        try:
            _, _, z, info = lapack.dptsv(d, op.T.sub, op.c.reshape(-1, 1))
        except ValueError as exc:  # pragma: no cover - wrapper-level failure
            raise SingularSystem(str(exc)) from exc
        if info != 0:
            raise SingularSystem("shift is not below the Dirichlet guard value")
        z = z[:, 0]
        z_cache[sigma] = (z, 1.0 - op.w_interior @ z)
    z, denom = z_cache[sigma]
    y = bvp.solve_symmetric_tridiagonal(d, op.T.sub, x)
    return y, z, denom


def _secular_polish(op: NonlocalOperator, lam: float, lam_star: float, steps: int = 8) -> float:
    """Newton steps on the secular function of the rank-one update.

    Roots of ``f(s) = 1 - w^T (T0 - s)^{-1} c`` below the guard are the
    eigenvalues of ``A``. Since ``c = (T0 - s) 1 + s 1 - b`` with ``b`` the
    boundary load, ``f(s) = int u dmu - s int v dmu``; evaluating it that way
    avoids the cancellation in both ``1 - w^T z`` and ``x^T A x``.
    """
    n = len(op.c)
    rhs = np.zeros((n, 2))
    rhs[0, 0] = rhs[-1, 0] = 0.5 / op.T.h ** 2
    rhs[:, 1] = 1.0
    wb = op.w[0] + op.w[-1]
    wi = op.w_interior
    for _ in range(steps):
        d = op.T.diag - lam
        try:
            uv = bvp.solve_symmetric_tridiagonal(d, op.T.sub, rhs)
            z = 1.0 + lam * uv[:, 1] - uv[:, 0]
            s = bvp.solve_symmetric_tridiagonal(d, op.T.sub, z)
        except SingularSystem:
            break
        f = wb + float(wi @ uv[:, 0]) - lam * float(wi @ uv[:, 1])
        deriv = -float(wi @ s)
        if not deriv < 0.0:
            break
        step = f / deriv
        if not abs(step) <= 0.1 * abs(lam) or not 0.0 < lam - step < lam_star:
            break
        lam -= step
        if abs(step) <= 4.0 * np.finfo(float).eps * abs(lam):
            break
    return lam


def principal_eigenvalue_matrix(gamma: float, V: RateField, mu: JumpMeasure,
                                grid: Grid, rel_tol: float = 1e-12,
                                op: NonlocalOperator | None = None) -> EigenResult:
    """Smallest-real-part eigenvalue of the discretized operator.

    Inverse iteration starts unshifted (the principal eigenvalue is the one
    of smallest modulus) and switches to Rayleigh-quotient shifts once the
    estimate has settled. Shifts are kept below the Dirichlet guard value so
    every tridiagonal factorization stays positive definite.
    """
    _check_tol(rel_tol)
    bvp._check_gamma(gamma)
    if op is None:
        op = build_operator(gamma, V, mu, grid)
    lam_star = base_dirichlet_eigenvalue(gamma, V, grid)
    n = len(op.c)
    x = np.ones(n) / math.sqrt(n)
    sigma = 0.0
    cache: dict = {}
    history = []
    theta_prev = None
    stall = 0
    # achievable accuracy is bounded below by eps * ||A||
    floor = 2.0 * np.finfo(float).eps * (2.0 / grid.h**2 + 2.0 * float(np.max(np.abs(op.c))))
    for it in range(1, INVERSE_ITERATION_CAP + 1):
        y, z, denom = _shifted_solve(op, sigma, x, cache)
        if abs(denom) < 1e-15 * (1.0 + abs(1.0 - denom)):
            # shift sits on the eigenvalue: z is the eigenvector direction
            y = z
        else:
            y = y + z * ((op.w_interior @ y) / denom)
        if y.sum() < 0.0:
            y = -y
        x = y / np.linalg.norm(y)
        Ax = op.matvec(x)
        theta = float(x @ Ax)
        res = float(np.linalg.norm(Ax - theta * x))
        history.append(theta)
        tol = max(rel_tol * abs(theta), floor)
        converged = res <= tol
        if theta_prev is not None:
            change = abs(theta - theta_prev)
            if change <= tol:
                stall += 1
            else:
                stall = 0
            converged = converged or stall >= 2
            if change <= 1e-4 * abs(theta) and theta < lam_star:
                sigma = theta * (1.0 - 1e-13) if theta > 0 else theta
        theta_prev = theta
        if converged:
            theta = _secular_polish(op, theta, lam_star)
            prof = x / np.max(np.abs(x))
            return EigenResult(theta, ScalarField(prof, 0.0, 0.0), None, "matrix",
                               it, res, lam_star, grid.h)
    tail = np.diff(history[-20:])
    if len(tail) > 2 and np.sum(np.sign(tail[1:]) != np.sign(tail[:-1])) > len(tail) // 2:
        raise ComplexEigenvalueSuspected(
            f"Rayleigh quotients oscillate at gamma={gamma}; eigenvalue may be complex")
    raise NonConvergence(f"inverse iteration did not converge at gamma={gamma}")


METHODS = ("fixed_point", "matrix", "auto")


def principal_eigenvalue(gamma: float, V: RateField, mu: JumpMeasure, grid: Grid,
                         method: str = "auto", rel_tol: float = 1e-12) -> EigenResult:
    """Dispatch to a route. ``auto`` uses the matrix route for degenerate rates
    (the fixed-point positivity argument needs ``min V > 0``) and the fixed
    point otherwise."""
    if method == "auto":
        method = "matrix" if V.is_degenerate else "fixed_point"
    if method == "fixed_point":
        if V.is_degenerate:
            raise InvalidArgument("degenerate rate requires the matrix route")
        return principal_eigenvalue_fixed_point(gamma, V, mu, grid, rel_tol)
    if method == "matrix":
        return principal_eigenvalue_matrix(gamma, V, mu, grid, rel_tol)
    raise InvalidArgument(f"unknown method {method!r}; valid: {', '.join(METHODS)}")


def richardson(lam_h: float, lam_h2: float) -> float:
    """Cancel the O(h^2) term from results on spacings h and h/2."""
    return (4.0 * lam_h2 - lam_h) / 3.0


@dataclass
class RichardsonResult:
    coarse: EigenResult
    fine: EigenResult

    @property
    def value(self) -> float:
        return richardson(self.coarse.lambda0, self.fine.lambda0)


def principal_eigenvalue_richardson(gamma: float, V: RateField, mu: JumpMeasure,
                                    grid: Grid, method: str = "auto",
                                    rel_tol: float = 1e-12) -> RichardsonResult:
    """Eigenvalue on ``grid`` and on the grid with half the spacing."""
    fine = grid.refined()
    coarse = principal_eigenvalue(gamma, V.on(grid), mu.on(grid), grid, method, rel_tol)
    fine_r = principal_eigenvalue(gamma, V.on(fine), mu.on(fine), fine, method, rel_tol)
    return RichardsonResult(coarse, fine_r)
