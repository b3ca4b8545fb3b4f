"""Exception hierarchy shared by all microspec modules."""


class MicrospecError(Exception):
    """Base class for every error raised by the package."""


class DomainError(MicrospecError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InsufficientDataError(MicrospecError, ValueError):
    pass


class DivergenceError(MicrospecError, ArithmeticError):
    """A supremum or integral did not stabilise within the search budget."""


class DegenerateSymbolError(MicrospecError, ValueError):
    pass


class DimensionMismatchError(MicrospecError, ValueError):
    pass


class InconsistencyError(MicrospecError, ArithmeticError):
    """Numerical estimates contradict an earlier verdict on the same input."""


class MagnitudeOverflowError(MicrospecError, OverflowError):
    def __init__(self, message, shell=None):
        super().__init__(message)
        self.shell = shell


class ResolutionError(MicrospecError, ValueError):
    """The grid is too coarse for the requested construction."""


class AliasingError(MicrospecError, ValueError):
    pass


class MarginError(MicrospecError, ValueError):
    pass


class ParseError(MicrospecError, ValueError):
    """Malformed text input; carries 1-based line and column."""

    def __init__(self, message, text="", line=1, column=1):
        self.line = line
        self.column = column
        self.text = text
        super().__init__(f"{message} (line {line}, column {column})")
