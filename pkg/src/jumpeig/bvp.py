"""Finite-difference solves of the two Dirichlet problems behind the fixed point.

For a shift ``lam`` and coupling ``gamma`` the interior operator is

    T(lam, gamma) = -1/2 D2_h + diag(gamma*V - lam),

with ``D2_h`` the standard three-point second difference. ``u`` solves
``T u = 0`` with boundary value 1 and ``v`` solves ``T v = 1`` with boundary
value 0. ``T`` is symmetric tridiagonal, so both are solved together by an
LDL^T factorization without pivoting (LAPACK ``dptsv``); a nonpositive pivot
means the shift reached the bottom of the Dirichlet spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import DiscretizationFailure, InvalidArgument, OutOfDomain, SingularSystem
from .model import Grid, RateField, ScalarField

GAMMA_MAX = 1e5


@dataclass(frozen=True)
class TridiagonalOperator:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    h: float

    def __len__(self):
        return len(self.diag)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``T x = rhs`` (rhs may be 1-D or have one column per system).

        Raises SingularSystem if elimination hits a nonpositive pivot.
        """
        return solve_symmetric_tridiagonal(self.diag, self.sub, rhs)


def solve_symmetric_tridiagonal(diag: np.ndarray, off: np.ndarray,
                                rhs: np.ndarray) -> np.ndarray:
    b = np.asarray(rhs, dtype=float)
    one_d = b.ndim == 1
    _, _, x, info = lapack.dptsv(diag, off, b.reshape(len(diag), -1))
    if info > 0:
        raise SingularSystem(f"nonpositive pivot at row {info}")
    if info < 0:
        raise InvalidArgument(f"dptsv rejected argument {-info}")
    return x[:, 0] if one_d else x


def _check_gamma(gamma: float) -> None:
    if not (math.isfinite(gamma) and 0.0 <= gamma <= GAMMA_MAX):
        raise InvalidArgument(f"gamma must lie in [0, {GAMMA_MAX:g}], got {gamma}")


def assemble(lam: float, gamma: float, V: RateField, grid: Grid) -> TridiagonalOperator:
    if not (math.isfinite(lam) and math.isfinite(gamma)):
        raise InvalidArgument("lam and gamma must be finite")
    h2 = grid.h * grid.h
    diag = 1.0 / h2 + gamma * V.values - lam
    off = np.full(grid.n_interior - 1, -0.5 / h2)
    return TridiagonalOperator(off, diag, off, grid.h)


def _boundary_load(grid: Grid) -> np.ndarray:
    b = np.zeros(grid.n_interior)
    b[0] = b[-1] = 0.5 / (grid.h * grid.h)
    return b


def solve_uv(lam: float, gamma: float, V: RateField, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Interior values of ``u`` and ``v`` from one factorization."""
    _check_gamma(gamma)
    T = assemble(lam, gamma, V, grid)
    rhs = np.column_stack((_boundary_load(grid), np.ones(grid.n_interior)))
    x = T.solve(rhs)
    return x[:, 0], x[:, 1]


def _check_u(u: np.ndarray, lam: float, gamma: float, V: RateField) -> None:
    # u may underflow to 0 for huge gamma; negative or >1 values are a bug signal
    if lam <= gamma * V.min_V and (np.any(u < 0.0) or np.any(u > 1.0 + 1e-12)):
        raise DiscretizationFailure("u left [0, 1] although lam <= gamma*min V")


def solve_u(lam: float, gamma: float, V: RateField, grid: Grid) -> ScalarField:
    _check_gamma(gamma)
    u = assemble(lam, gamma, V, grid).solve(_boundary_load(grid))
    _check_u(u, lam, gamma, V)
    return ScalarField(u, 1.0, 1.0)


def solve_v(lam: float, gamma: float, V: RateField, grid: Grid) -> ScalarField:
    _check_gamma(gamma)
    v = assemble(lam, gamma, V, grid).solve(np.ones(grid.n_interior))
    return ScalarField(v, 0.0, 0.0)


def closed_form_constant_V(lam: float, gamma: float, V0: float, x):
    """Exact ``(u, v)`` at ``x`` for a constant rate ``V0``.

    ``u = cosh(k(x-1/2)) / cosh(k/2)`` with ``k = sqrt(2(gamma V0 - lam))``,
    evaluated in a form that does not overflow for large ``k``.
    """
    a = gamma * V0 - lam
    if not a > 0.0:
        raise OutOfDomain("closed form needs gamma*V0 > lam")
    k = math.sqrt(2.0 * a)
    s = np.abs(np.asarray(x, dtype=float) - 0.5)
    u = np.exp(k * (s - 0.5)) * (1.0 + np.exp(-2.0 * k * s)) / (1.0 + math.exp(-k))
    v = (1.0 - u) / a
    return u, v


def boundary_normal_derivative(f: ScalarField, grid: Grid) -> tuple[float, float]:
    """Inward normal derivatives ``(f'(0), -f'(1))``, second-order one-sided."""
    fi = f.interior
    h = grid.h
    d0 = (-3.0 * f.left + 4.0 * fi[0] - fi[1]) / (2.0 * h)
    d1 = (-3.0 * f.right + 4.0 * fi[-1] - fi[-2]) / (2.0 * h)
    return float(d0), float(d1)
