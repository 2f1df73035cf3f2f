"""Exception hierarchy.

Every error raised on purpose by the library derives from `CorrGeoError`.
`NumericalError` subclasses are the failures the CLI maps to exit code 2;
everything else is a validation problem (exit code 1).
"""


class CorrGeoError(Exception):
    """Base class for all library errors."""


class ValidationError(CorrGeoError, ValueError):
    """Bad input: wrong shape, bad labels, malformed files."""


class NumericalError(CorrGeoError, ArithmeticError):
    """An algorithm could not produce a valid result for valid-looking input."""


class InvalidInput(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class DiagonalNotUnit(ValidationError):
    pass


class DegenerateGroup(ValidationError):
    pass


class SingleClass(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class LeakageError(ValidationError):
    """A fitted transform was about to see rows it will later be evaluated on."""


class ParseError(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class MissingFile(ValidationError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, residual=None, result=None):
        super().__init__(message)
        self.residual = residual
        self.result = result


class CutLocus(NumericalError):
    pass


class SingularCovariance(NumericalError):
    pass
