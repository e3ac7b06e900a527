"""Exception hierarchy shared by all modules."""


class CavityStabilityError(Exception):
    """Base class for every error raised by this package."""


class InvalidGridError(CavityStabilityError, ValueError):
    """Periodic sample vector has an unusable length."""


class IndefiniteGramError(CavityStabilityError, ValueError):
    """Gram matrix of a generalized eigenproblem is not positive definite."""


class BracketError(CavityStabilityError, ValueError):
    """Root-finding interval does not bracket a sign change."""


class GeometryViolationError(CavityStabilityError, ValueError):
    """Radial profile leaves the open interval (0, R0)."""


class DomainError(CavityStabilityError, ValueError):
    """Arguments outside the domain where a quantity is defined."""


class SolverFailure(CavityStabilityError, RuntimeError):
    """Discrete elasticity system could not be solved."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NotCriticalError(CavityStabilityError):
    """Second variation requested at a pair that fails the criticality gate."""

    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class StalledDescentError(CavityStabilityError, RuntimeError):
    """Backtracking line search exhausted its halvings."""

    def __init__(self, message, state=None, trace=None):
        super().__init__(message)
        self.state = state
        self.trace = trace


class ConfigError(CavityStabilityError, ValueError):
    """Malformed run configuration."""
