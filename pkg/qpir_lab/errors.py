"""Exception hierarchy for qpir_lab.

Every error derives from ``QpirError`` and from the closest builtin, so callers may catch
either ``QpirError`` or e.g. ``ValueError``.
"""

from typing import Any, Optional


class QpirError(Exception):
    pass


# Field arithmetic.
class NonPrimeError(QpirError, ValueError):
    pass


class ReducibleModulusError(QpirError, ValueError):
    pass


class DivideByZeroError(QpirError, ZeroDivisionError):
    pass


class FieldMismatchError(QpirError, TypeError):
    pass


class ElementRangeError(QpirError, ValueError):
    pass


class OddCharacteristicError(QpirError, ValueError):
    pass


# Codes and linear algebra.
class OddLengthError(QpirError, ValueError):
    pass


class InvalidCodeError(QpirError, ValueError):
    pass


class DimensionMismatchError(QpirError, ValueError):
    pass


class LocatorMismatchError(QpirError, ValueError):
    pass


class DimensionOverflowError(QpirError, ValueError):
    pass


class DimensionTooSmallError(QpirError, ValueError):
    pass


class NotFoundError(QpirError, LookupError):
    pass


class ConstraintViolatedError(QpirError, ValueError):
    pass


class NotWeaklySelfDualError(QpirError, ValueError):
    pass


class LengthMismatchError(QpirError, ValueError):
    pass


class SingularBasisError(QpirError, ArithmeticError):
    pass


class InconsistentError(QpirError, ArithmeticError):
    pass


# Protocol.
class InvalidParamsError(QpirError, ValueError):
    pass


class IncompleteRoundsError(QpirError, ValueError):
    pass


class SingularSubmatrixError(QpirError, ArithmeticError):
    pass


# Dense oracle.
class EvenCharacteristicUnsupportedError(QpirError, NotImplementedError):
    pass


class NotSelfOrthogonalError(QpirError, ValueError):
    pass


class TooLargeError(QpirError, MemoryError):
    pass


# Verification.
class SupportTooLargeError(QpirError, ValueError):
    pass


class CheckFailedError(QpirError, AssertionError):
    def __init__(self, check: str, message: str, witness: Optional[Any] = None):
        super().__init__(f"{check}: {message} (witness: {witness})")
        self.check = check
        self.witness = witness


class QpirIoError(QpirError, OSError):
    pass
