"""Exception types shared across the package."""


class KineticRknnError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(KineticRknnError, ValueError):
    """A parameter is outside its documented range."""


class InvalidInputError(KineticRknnError, ValueError):
    """Input data violates a precondition (duplicate ids, shape mismatch, ...)."""


class DegenerateInputError(KineticRknnError, ValueError):
    """Geometrically degenerate input (e.g. classifying a point against itself)."""


class TimeTravelError(KineticRknnError, RuntimeError):
    """A kinetic structure was asked to rewind to an earlier time."""


class ParseError(KineticRknnError, ValueError):
    """A dataset or query file could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
