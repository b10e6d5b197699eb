from typing import Optional


class LeakSeqError(Exception):
    """Base class for every error raised by leakseq"""


class DomainError(LeakSeqError, ValueError):
    """Input outside the domain of an operation (shape, index, hermiticity)"""


class NumericError(LeakSeqError, ArithmeticError):
    """Numerical failure: eigensolver breakdown or non-finite values"""

    def __init__(self, message: str, coordinate: Optional[int] = None):
        super().__init__(message)
        self.coordinate = coordinate


class SingularProjectionError(NumericError):
    """The projected logical block is (numerically) singular"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class DegenerateInvariantsError(NumericError):
    """The perfect-entangler cubic has genuinely complex roots"""


class DependencyError(LeakSeqError):
    """A bootstrap guess needs a shorter solution that has not been computed"""

    def __init__(self, message: str, divisor: int):
        super().__init__(message)
        self.divisor = divisor


class ArchiveError(LeakSeqError, IOError):
    """Malformed or mismatching solution archive"""

    def __init__(self, message: str, path: Optional[str] = None, field: Optional[str] = None):
        context = [f"{name}={value}" for name, value in (("path", path), ("field", field)) if value is not None]
        super().__init__(f"{message} ({', '.join(context)})" if context else message)
        self.path = path
        self.field = field
