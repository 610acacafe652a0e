"""Exception hierarchy shared by all modules."""


class ShutterAngleError(Exception):
    """Base class for every error raised by this package."""


class FormatError(ShutterAngleError):
    """A file does not follow the expected container layout."""


class TruncationError(FormatError):
    """A payload ended before the header-announced size."""

    def __init__(self, expected: int, actual: int, what: str = "payload"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"truncated {what}: expected {expected} bytes, got {actual}")


class DataError(FormatError):
    """A payload parsed correctly but holds forbidden values."""

    def __init__(self, message: str, pixel: tuple[int, int] | None = None):
        self.pixel = pixel
        super().__init__(message)


class ShapeError(ShutterAngleError, ValueError):
    """Two fields that must share dimensions do not."""


class ParameterError(ShutterAngleError, ValueError):
    """An argument lies outside its admissible range."""


class ConfigurationError(ShutterAngleError, ValueError):
    """A synthetic clip recipe cannot be rendered."""


class EstimationFailedError(ShutterAngleError):
    """No frame of a clip produced an exposure estimate.

    ``diagnostics`` holds one entry per frame explaining why it was skipped.
    """

    def __init__(self, message: str, diagnostics: list[dict] | None = None):
        self.diagnostics = diagnostics or []
        super().__init__(message)
