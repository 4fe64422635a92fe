"""Exception hierarchy shared by all combclt modules."""


class CombCLTError(Exception):
    """Base class for every error raised by combclt."""


class InvalidArguments(CombCLTError, ValueError):
    pass


class SchemaError(CombCLTError, ValueError):
    """Input document does not match the ArraySpec / SrsSpec schema."""


class QuadratureFailure(CombCLTError, ArithmeticError):
    pass


class DegenerateVariance(CombCLTError, ArithmeticError):
    pass


class SizeLimitExceeded(CombCLTError):
    pass


class NotCentered(CombCLTError, ValueError):
    pass


class ThetaNonpositive(CombCLTError, ArithmeticError):
    """The concentration constant theta is <= 0, so c1 and c2 are undefined."""


class InternalCheckFailure(CombCLTError, AssertionError):
    """An oracle cross-check disagreed with the primary computation."""
