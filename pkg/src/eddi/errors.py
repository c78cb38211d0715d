"""Exception hierarchy.

Errors fall in two families that the command line maps to exit codes:
:class:`DataError` (bad or insufficient input, exit 3) and
:class:`NumericalError` (the computation itself broke down, exit 4).
"""


class EddiError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class DataError(EddiError, ValueError):
    exit_code = 3


class NumericalError(EddiError, ArithmeticError):
    exit_code = 4


class InvalidSeries(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class OutOfRange(DataError):
    pass


class WindowTooLarge(DataError):
    pass


class GridMismatch(DataError):
    pass


class CSVFormatError(DataError):
    pass


class InvalidCutoff(DataError):
    pass


class ParseError(DataError):
    """Term expression could not be parsed.

    ``offset`` is the byte offset into the expression where parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DuplicateTerm(DataError):
    pass


class NoCrossings(DataError):
    pass


class InsufficientCrossings(DataError):
    pass


class InsufficientSamples(DataError):
    pass


class AllMasked(DataError):
    pass


class ModelFileError(DataError):
    pass


class StepSizeUnderflow(NumericalError):
    def __init__(self, t):
        super().__init__(f"step size underflow at t={t!r}")
        self.t = t


class AllThresholded(NumericalError):
    pass


class RankDeficientWarning(UserWarning):
    """Least-squares matrix was numerically rank deficient.

    The dependent columns had their coefficients set to zero.
    """
