"""Exception types shared across the package."""


class ShadowSegError(Exception):
    """Base class for errors raised by this package."""


class FormatError(ShadowSegError, ValueError):
    """An input file decodes to something the pipeline cannot use."""


class ValidationError(ShadowSegError, ValueError):
    """An argument or derived value violates a documented invariant."""


class CalibrationError(ShadowSegError, ValueError):
    """Interval calibration cannot proceed (e.g. a class has no samples)."""
