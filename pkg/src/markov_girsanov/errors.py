"""Exception hierarchy.

Every error raised by the library derives from :class:`MarkovGirsanovError`,
so callers (the CLI in particular) can catch one type.
"""


class MarkovGirsanovError(Exception):
    pass


class ValidationError(MarkovGirsanovError, ValueError):
    """Input data does not describe a valid object."""


class DimensionMismatch(ValidationError):
    pass


class NotSquare(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class RowSumNotOne(ValidationError):
    pass


class ZeroEntryWhenPositivityRequired(ValidationError):
    pass


class NegativeOffDiagonal(ValidationError):
    pass


class RowSumNotZero(ValidationError):
    pass


class ZeroOffDiagonalWhenPositivityRequired(ValidationError):
    pass


class InvalidDistribution(ValidationError):
    pass


class InvalidPath(ValidationError):
    pass


class InfeasibleCoefficients(ValidationError):
    """Quadratic-family coefficients produce a negative off-diagonal rate."""


class TimeOutOfRange(ValidationError):
    pass


class ScaleTooLarge(MarkovGirsanovError):
    """An exact (enumeration) routine was asked to work beyond its guard."""


class ZeroTargetProbability(MarkovGirsanovError):
    pass


class ZeroTargetRate(MarkovGirsanovError):
    pass


class ZeroReferenceProbability(MarkovGirsanovError):
    pass


class NotCenteredError(ValidationError):
    pass


class ZeroLikelihood(MarkovGirsanovError):
    pass


class NegativeProbability(MarkovGirsanovError):
    pass


class DegenerateReference(ValidationError):
    pass
