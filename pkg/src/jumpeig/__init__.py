"""Principal eigenvalue of a Dirichlet Laplacian with nonlocal jump coupling.

``L = -1/2 d^2/dx^2 + gamma V C_mu`` on (0, 1), where ``C_mu f = f - int f dmu``.
"""
from .errors import (ComplexEigenvalueSuspected, DiscretizationFailure, InvalidArgument,
                     InvalidMeasure, InvalidRate, JumpEigError, NoRootFound, NonConvergence,
                     OutOfDomain, OutOfHypothesis, SingularSystem)
from .model import (Grid, JumpMeasure, RateField, ScalarField, build_grid, build_jump_measure,
                    build_rate_field, jump_measure_from_density, rate_field_from_values)
from .bvp import closed_form_constant_V, solve_u, solve_uv, solve_v
from .eigen import (EigenResult, base_dirichlet_eigenvalue, build_operator, fixed_point_residual,
                    principal_eigenvalue, principal_eigenvalue_fixed_point,
                    principal_eigenvalue_matrix, principal_eigenvalue_richardson, richardson)
from .asym import (fit_power_law, lemma_diagnostics, sweep_gamma, theoretical_limit_constant)

__version__ = "0.1.0"
