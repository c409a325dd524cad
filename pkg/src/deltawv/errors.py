"""Exception hierarchy shared by all deltawv modules."""


class DeltaWVError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(DeltaWVError, ValueError):
    """Unknown series name, bad flag combination, malformed input file."""


class ValidationError(DeltaWVError, ValueError):
    """A structurally valid input violates a domain invariant."""


class NumericError(DeltaWVError, ArithmeticError):
    """Base for failures of the numerical machinery (CLI exit code 3)."""


class NonConvergenceError(NumericError):
    """A series or scan did not meet its stopping criterion within budget."""


class PrecisionExhaustedError(NumericError):
    """Requested accuracy is not reachable within the precision budget.

    ``required_prec`` carries the estimated precision (bits) that would
    have been sufficient, when known.
    """

    def __init__(self, message, required_prec=None):
        super().__init__(message)
        self.required_prec = required_prec


class NearZeroError(NumericError, ZeroDivisionError):
    """Division by a function value indistinguishable from zero."""


class InsufficientDataError(NumericError, ValueError):
    """Too few usable rows for a least-squares fit."""


class MinimalSolutionNotFoundError(NumericError):
    """Backward recurrence did not stabilise under margin doubling."""


class NeedsMoreTermsError(NonConvergenceError):
    """A Newton series was truncated before its tail criterion held."""


class GrowthDataError(NumericError):
    """Sampled log M(r) is not monotone, so the evaluation broke down."""
