"""Exception hierarchy shared by the numerical modules and the CLI."""


class XyFseError(Exception):
    """Base class for every error raised by this package."""


class QuadratureNotConverged(XyFseError):
    pass


class NotGapped(XyFseError):
    pass


class NonConformalPoint(XyFseError):
    """Raised when a CFT-facing operation receives a quadratic-dispersion point."""


class PatternError(XyFseError, ValueError):
    pass


class PatternTooSmall(PatternError):
    pass


class EigensolveFailed(XyFseError):
    pass


class SpectrumOutOfRange(EigensolveFailed):
    pass


class InvalidAlpha(XyFseError, ValueError):
    pass


class InvalidKf(XyFseError, ValueError):
    pass


class VectorsMissing(XyFseError):
    pass


class FitIllConditioned(XyFseError):
    pass


class UncalibratedS0(XyFseError):
    pass


class TooFewPoints(XyFseError):
    pass


class AllPointsNearZeroCrossing(XyFseError):
    pass


class ConfigError(XyFseError, ValueError):
    pass


class MalformedInput(XyFseError, ValueError):
    pass


class Degenerate(XyFseError):
    """Ground space is degenerate; ``states`` holds the lowest states found."""

    def __init__(self, message, states):
        super().__init__(message)
        self.states = states
