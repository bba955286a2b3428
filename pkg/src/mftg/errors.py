"""Exception types shared across the package.

Each error class maps to one failure family so callers (and the CLI exit-code
table) can dispatch on type rather than message text.
"""


class MftgError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(MftgError, ValueError):
    """An argument violates a documented precondition (bad shape, range, or state)."""


class ModelValidationError(MftgError, ValueError):
    """A model or sampled policy row fails its stochasticity / boundedness checks."""


class CapacityError(MftgError, RuntimeError):
    """An enumeration would exceed its configured cap.

    The offending cap is kept on the exception for reporting.
    """

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class ReachabilityError(MftgError, RuntimeError):
    """A target distribution is not attainable from the current state.

    ``residual`` is the best achievable infeasibility reported by the
    membership solve.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DegenerateGridError(MftgError, RuntimeError):
    """A solve step found no grid candidates inside a reachable set (grid too coarse)."""


class CatalogError(MftgError, KeyError):
    """An unknown fixture or strategy name was requested."""
