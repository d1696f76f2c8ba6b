"""Exception types raised by genlik."""


class GenlikError(Exception):
    """Base class for all genlik errors."""


class DimensionMismatch(GenlikError, ValueError):
    pass


class InvalidDistribution(GenlikError, ValueError):
    """Negative entries or a total mass too far from 1 to renormalize."""


class LogOfZero(GenlikError, ValueError):
    """An observed value with positive weight has zero model probability."""


class NonPositiveBeta(GenlikError, ValueError):
    pass


class AllZeroColumn(GenlikError, ValueError):
    pass


class SupportViolation(GenlikError, ValueError):
    pass


class Infeasible(GenlikError, ValueError):
    """A constraint target lies outside its achievable range."""


class InfeasibleConstraints(Infeasible):
    """The constraint polytope is empty."""


class RootBracketFailure(GenlikError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RootSolveFailure(GenlikError, RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class InnerOptimizerFailure(GenlikError, RuntimeError):
    pass


class RejectionBudgetExhausted(GenlikError, RuntimeError):
    pass


class MomentSolveFailure(GenlikError, RuntimeError):
    pass
