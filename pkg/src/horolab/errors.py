"""Exception hierarchy shared by every module."""


class HorolabError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class DomainError(HorolabError, ValueError):
    """Input outside the domain of an operation (e.g. a point off the open disk)."""


class MetricInvalidError(HorolabError):
    """Perturbed metric violates K <= 0 somewhere on the validation grid."""


class NumericFailure(HorolabError):
    """A numerical procedure did not converge or violated a certified property."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class HorizonError(NumericFailure):
    """A sample came within 1e-12 of the unit circle."""


class ConjugatePointError(NumericFailure):
    """A Jacobi field started at J=0, J'=1 returned to zero."""


class PairingError(NumericFailure):
    """Two boundary measures could not be matched atom by atom."""


class DegenerateInputError(HorolabError, ValueError):
    """Inputs are valid individually but leave nothing to compute (empty shadow, short series)."""


class BudgetExceeded(HorolabError):
    """Orbit enumeration frontier exceeded the node budget.

    ``partial`` carries whatever was enumerated before the budget ran out.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
