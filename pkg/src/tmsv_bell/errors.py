"""Exception hierarchy shared by all modules."""


class TmsvBellError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TmsvBellError, ValueError):
    """An input lies outside its physical or mathematical range."""


class ConfigurationError(TmsvBellError, ValueError):
    """A numerical setting (cutoff, tolerance, grid) is unusable."""


class DivergenceError(DomainError):
    """A quantity is infinite at the requested point."""


class ConvergenceError(TmsvBellError, ArithmeticError):
    """A series did not converge within its term cap.

    ``partial_sum`` and ``terms_used`` describe where summation stopped.
    """

    def __init__(self, message, partial_sum=float("nan"), terms_used=0):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.terms_used = terms_used


class NeverNonlocalError(TmsvBellError):
    """The Bell factor does not exceed 2 even without loss."""


class BracketingError(TmsvBellError):
    """No sign change of B_max - 2 could be bracketed.

    ``scan`` holds the ``(R, bmax)`` pairs of the diagnostic coarse scan.
    """

    def __init__(self, message, scan=()):
        super().__init__(message)
        self.scan = list(scan)
