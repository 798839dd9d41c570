"""Exception hierarchy shared by every gmv module."""


class GMVError(Exception):
    """Base class for all errors raised by gmv."""


class ParameterError(GMVError, ValueError):
    """Invalid argument value or inconsistent dimensions."""


class DegenerateCodeError(GMVError, ValueError):
    """An all-zero ternary code carries no direction to reconstruct."""


class NumericalFailureError(GMVError, ArithmeticError):
    """A linear system was singular or an objective became non-finite."""


class EvaluationError(GMVError):
    """An evaluation could not produce a single valid sample."""


class FormatError(GMVError, ValueError):
    """Malformed GMVD / GMVM file.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
