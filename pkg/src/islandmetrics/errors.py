"""Exception hierarchy shared across the package.

Two broad families matter to callers:

* :class:`ValidationError` (a ``ValueError``) - the input violated a
  documented precondition or invariant.  The CLI maps these to exit code 2.
* :class:`ParseError` - an on-disk artifact is malformed.  Also exit code 2.

Plain I/O failures (missing files, permissions) are left to the builtin
``OSError`` and map to exit code 1.
"""


class IslandMetricsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IslandMetricsError, ValueError):
    """An argument or data structure violates a documented precondition."""


class LengthMismatchError(ValidationError):
    """Paired sequences have different lengths."""


class TooFewPointsError(ValidationError):
    """An operation needs more points than were supplied."""


class DegenerateSourceError(ValidationError):
    """Source points are (nearly) coincident; no similarity is recoverable."""


class FrameIdMismatchError(ValidationError):
    """Two trajectories do not cover the same frame ids."""


class SchemaError(ValidationError):
    """A JSON document does not match its schema.

    ``field`` names the offending location, e.g. ``frames[3].position``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DuplicateFrameIdError(SchemaError):
    """A trajectory document repeats a frame id."""


class WrongFrameError(ValidationError):
    """A trajectory document is in the wrong coordinate frame for the call."""


class NoViewsError(ValidationError):
    """Labeling was invoked with an empty view list."""


class EmptyCloudError(ValidationError):
    """An operation requires a non-empty point cloud."""


class VotesMissingError(ValidationError):
    """The point cloud carries no per-point vote counts."""


class NonPositiveCellSizeError(ValidationError):
    """Grid cell size must be strictly positive."""


class EmptyInputError(ValidationError):
    """Rasterization requires at least one point."""


class NonPositiveGroundTruthError(ValidationError):
    """Relative error is undefined for a non-positive ground truth."""


class NegativeSigmaError(ValidationError):
    """Noise standard deviation must be non-negative."""


class SpecInvalidError(ValidationError):
    """A synthetic scene specification is inconsistent."""


class ParseError(IslandMetricsError):
    """A file's bytes could not be parsed.

    ``offset`` is the byte offset of the failure when it is known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedEncodingError(ParseError):
    """The file uses an encoding this reader does not support."""


class MissingXyzError(ParseError):
    """A point cloud file lacks x/y/z vertex coordinates."""


class UnsupportedColorTypeError(ParseError):
    """A mask image is not single-channel grayscale."""
