"""Exception hierarchy shared across the package."""


class SchresError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SchresError):
    """Argument outside the supported range of a special function."""


class PoleError(SchresError):
    """Evaluation at (or numerically indistinguishable from) a pole."""


class HankelPoleError(PoleError):
    """A quadrature point landed on a zero of a Hankel function."""


class ParamError(SchresError):
    """Invalid parameter for mesh generation or configuration."""


class PotentialSyntaxError(SchresError):
    """Malformed potential definition text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, col {column}: {message}"
        super().__init__(message)


class SemanticError(SchresError):
    """Well-formed but meaningless potential definition (unbounded region, ...)."""


class EvalError(SchresError):
    """Potential expression singular or non-finite at an evaluation point."""


class SingularError(SchresError):
    """Exactly singular matrix encountered during factorization."""

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class DimensionError(SchresError):
    """Mismatched dimensions in a linear-algebra call."""


class NoConvergence(SchresError):
    """Iteration failed to reach the requested tolerance."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class NearPoleError(SchresError):
    """A contour solve was too ill-conditioned; quadrature point near an eigenvalue."""


class DegenerateError(SchresError):
    """Both projection norms at the numerical noise floor."""


class BudgetError(SchresError):
    """Live-region count exceeded the configured cap during the search."""


class MatchError(SchresError):
    """A tracked resonance could not be matched across refinement levels."""


class ConfigError(SchresError):
    """Invalid run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"config line {line}: {message}"
        super().__init__(message)
