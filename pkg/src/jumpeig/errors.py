"""Exception types raised across the package.

Each class carries a short ``kind`` string so the command-line front end can
emit a machine-readable error object without string matching.
"""


class JumpEigError(Exception):
    kind = "error"


class InvalidArgument(JumpEigError, ValueError):
    kind = "invalid-argument"


class InvalidRate(InvalidArgument):
    kind = "invalid-rate"


class InvalidMeasure(InvalidArgument):
    kind = "invalid-measure"


class OutOfDomain(InvalidArgument):
    kind = "out-of-domain"


class OutOfHypothesis(InvalidArgument):
    kind = "out-of-hypothesis"


class SingularSystem(JumpEigError, ArithmeticError):
    """Shifted operator lost positive definiteness (shift at or above the guard)."""

    kind = "singular-system"


class DiscretizationFailure(JumpEigError, ArithmeticError):
    kind = "discretization-failure"


class NoRootFound(JumpEigError, ArithmeticError):
    kind = "no-root"


class NonConvergence(JumpEigError, ArithmeticError):
    kind = "non-convergence"


class ComplexEigenvalueSuspected(NonConvergence):
    """Inverse iteration stagnated with oscillating Rayleigh quotients."""

    kind = "complex-eigenvalue-suspected"
