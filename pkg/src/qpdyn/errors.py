"""Exception and warning types raised across the package."""


class QpdynError(Exception):
    """Base class for all package errors."""


class GridError(QpdynError, ValueError):
    """Invalid grid parameters or mismatched grids."""


class ZeroNormError(QpdynError, ValueError):
    """A state or field has no weight to normalize or sample from."""


class ImaginaryResidueError(QpdynError, ArithmeticError):
    """A quantity expected to be real carries a significant imaginary part."""


class NumericalFailure(QpdynError, ArithmeticError):
    """Propagation broke down (step-size underflow or non-finite state)."""


class StepSizeUnderflow(NumericalFailure):
    pass


class NonFiniteState(NumericalFailure):
    pass


class UnsupportedModelError(QpdynError, ValueError):
    """Model combination not available on the requested code path."""


class FieldFormatError(QpdynError, ValueError):
    """Corrupt or inconsistent field file."""


class KindMismatchError(FieldFormatError):
    """Field file holds a different kind of field than the caller expected."""


class ConfigError(QpdynError, ValueError):
    """Invalid experiment configuration."""


class BoundaryTruncationWarning(UserWarning):
    """A sampled state carries non-negligible amplitude at the grid edge."""


class OverflowClampWarning(UserWarning):
    """An exponent was clamped to avoid floating-point overflow."""
