"""Exception hierarchy shared by every module."""


class PMCodeError(Exception):
    """Base class for all errors raised by pmcodes."""


class InvalidParams(PMCodeError, ValueError):
    """Code parameters violate the regime constraints."""


class FieldMismatch(PMCodeError, TypeError):
    pass


class DivisionByZero(PMCodeError, ZeroDivisionError):
    pass


class DimensionMismatch(PMCodeError, ValueError):
    pass


class SingularSystem(PMCodeError, ArithmeticError):
    """A linear system has no unique solution."""


class FieldTooSmall(PMCodeError, ValueError):
    """The field cannot supply enough admissible evaluation points."""


class ShortMessage(PMCodeError, ValueError):
    pass


class DecodeFailure(PMCodeError):
    """No codeword lies within the requested correction radius.

    Recoverable: the caller usually retries with a larger protection level.
    """


class TooManyErasures(PMCodeError):
    pass


class NotEnoughHelpers(PMCodeError):
    pass


class NotEnoughShares(PMCodeError):
    pass


class BudgetExceeded(PMCodeError):
    """An exhaustive enumeration would exceed its configured budget."""


class ShareFormatError(PMCodeError, ValueError):
    """A share file is malformed or violates its header invariants."""


class TooFewObservations(PMCodeError, ValueError):
    """Fewer usable symbols than the decoder's budget requires."""
