"""Exception hierarchy shared across the package.

Every error raised by the pipeline derives from :class:`DispatError` so the
CLI can map it to exit code 1 and print the class name.
"""


class DispatError(Exception):
    """Base class for all package errors."""


# numerics
class ShapeError(DispatError, ValueError):
    pass


class NumericError(DispatError, FloatingPointError):
    pass


class TapeError(DispatError, RuntimeError):
    pass


class EmptyPoolError(DispatError, ValueError):
    pass


# claims
class ParseError(DispatError, ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class ForwardReferenceError(ParseError):
    pass


class EmptyPatentError(DispatError, ValueError):
    pass


# corpus
class ValidationError(DispatError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateIdError(ValidationError):
    pass


# retrieval / persistence
class NotIndexedError(DispatError, KeyError):
    pass


class FormatError(DispatError, ValueError):
    pass


class ConfigError(DispatError, ValueError):
    pass


class MissingEmbeddingError(DispatError, KeyError):
    pass


# evidential
class EmptyReferenceError(DispatError, ValueError):
    pass


class InvalidClaimError(DispatError, IndexError):
    pass


class DegenerateVectorWarning(RuntimeWarning):
    """A zero-norm vector was encountered; cosine is reported as 0."""
