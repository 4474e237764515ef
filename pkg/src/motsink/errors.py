"""Exception hierarchy shared by all solvers and file readers."""


class MotError(Exception):
    """Base class for every error raised by motsink."""


class ValidationError(MotError, ValueError):
    """Invalid input: bad weights, shapes, parameters or graph structure."""


class OracleSizeError(ValidationError):
    """A dense tensor would exceed the configured entry cap."""


class NumericalError(MotError, ArithmeticError):
    """A Sinkhorn update produced a zero, negative or non-finite quantity.

    ``node`` is the (0-based) marginal or message index involved, if known.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class MeasureFileError(MotError, OSError):
    """Malformed measure, grid or series file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
