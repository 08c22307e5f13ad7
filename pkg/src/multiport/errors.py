"""Exception types shared across the package."""


class MultiportError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(MultiportError, ValueError):
    """An input value violates a documented precondition."""


class ShapeError(ValidationError):
    """A grid or vector has the wrong shape."""


class SizeLimitError(ValidationError):
    """Problem size exceeds a documented hard bound."""


class GaugeAnchorError(ValidationError):
    """A first-row or first-column entry is too small to anchor the gauge."""


class DegenerateDataError(MultiportError):
    """No usable visibility cells remain after masking."""


class ParseError(MultiportError):
    """A data file could not be parsed. Carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class FitFailureError(MultiportError):
    """A curve fit did not converge. Carries the best residual RMS seen."""

    def __init__(self, message, residual_rms=None):
        super().__init__(message)
        self.residual_rms = residual_rms


class ReconstructionError(MultiportError):
    """Every reconstruction start failed with a non-finite objective."""


class NotFittedError(MultiportError, AttributeError):
    """An estimator method requiring a fit was called before fit()."""
