"""Exception hierarchy shared by all modules."""


class AdaVolError(Exception):
    """Base class for every error raised by this package."""


class NonNegativityViolation(AdaVolError, ValueError):
    pass


class StationarityViolation(AdaVolError, ValueError):
    pass


class UnsupportedOrder(AdaVolError, ValueError):
    pass


class NonPositiveVariance(AdaVolError, ValueError):
    pass


class ModeMismatch(AdaVolError, ValueError):
    pass


class WindowTooSmall(AdaVolError, ValueError):
    pass


class InvalidConfig(AdaVolError, ValueError):
    pass


class NonFiniteInput(AdaVolError, ValueError):
    pass


class LengthMismatch(AdaVolError, ValueError):
    pass


class NonPositiveTruth(AdaVolError, ValueError):
    pass


class AlphaOutOfRange(AdaVolError, ValueError):
    pass


class DomainError(AdaVolError, ValueError):
    pass


class EmptySeries(AdaVolError, ValueError):
    pass


class NonMonotoneDates(AdaVolError, ValueError):
    pass


class ParseError(AdaVolError, ValueError):
    """A row of an input file could not be turned into a valid observation."""

    def __init__(self, row, reason):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class NonConvergence(UserWarning):
    """Issued (not raised) when a batch fit stops before reaching its tolerance."""
