"""Exception hierarchy shared by all gapsol modules."""


class GapsolError(Exception):
    """Base class for every error raised by gapsol."""


class NonHermitianCoupling(GapsolError):
    pass


class DimensionMismatch(GapsolError):
    pass


class IndexOutOfRange(GapsolError):
    pass


class ParseError(GapsolError):
    pass


class ConvergenceFailure(GapsolError):
    pass


class NonIsolatedExtremum(GapsolError):
    pass


class DegenerateEigenvalue(GapsolError):
    pass


class NoGap(GapsolError):
    pass


class AnisotropicIndefinite(GapsolError):
    pass


class NoRealGroundState(GapsolError):
    pass


class BracketingFailure(GapsolError):
    pass


class ToleranceNotMet(GapsolError):
    pass


class NonConvergentMoment(GapsolError):
    pass


class NotInGap(GapsolError):
    pass


class ZeroDenominator(GapsolError):
    pass


class Diverged(GapsolError):
    """Petviashvili iteration failed; carries the last iterate and diagnostics."""

    def __init__(self, message, field=None, diagnostics=None):
        super().__init__(message)
        self.field = field
        self.diagnostics = diagnostics


class InsufficientData(GapsolError):
    pass


class PartialReport(GapsolError):
    """Some runs of a sweep failed; ``report`` holds what succeeded."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DomainTooSmall(UserWarning):
    """The envelope has not decayed at the edge of the periodic box."""
