"""Exception hierarchy.

Two families matter to callers: ``ValidationError`` subclasses signal bad
domain input (CLI exit code 2), ``IoError`` signals filesystem trouble
(exit code 1). Everything derives from ``DatumWorthError`` so library users
can catch broadly.
"""


class DatumWorthError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DatumWorthError):
    """A domain invariant or precondition was violated."""


class DimensionMismatch(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class NonFiniteFeature(ValidationError):
    pass


class NonBinaryLabel(ValidationError):
    pass


class EmptyTrainingSet(ValidationError):
    pass


class EmptyEvaluationSet(ValidationError):
    pass


class TooLargeForExact(ValidationError):
    pass


class MissingFlag(ValidationError):
    pass


class DegenerateTable(ValidationError):
    pass


class InsufficientClass(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed input file content; message carries the line number."""


class SchemaError(ValidationError):
    """A persisted document has an unknown or incompatible schema version."""


class IoError(DatumWorthError):
    """Filesystem-level failure (missing path, unreadable file, ...)."""
