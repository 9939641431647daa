"""Exception hierarchy.

Errors split into two families so callers (the CLI in particular) can map
them onto exit codes: ``InputError`` for malformed data or configuration and
``EstimationError`` for failures of the estimator on otherwise valid input.
"""


class FQuantError(Exception):
    """Base class for all package errors."""


class InputError(FQuantError, ValueError):
    """Invalid data or configuration."""


class EstimationError(FQuantError):
    """The estimator cannot produce a value for this input."""


class CurveTooShort(InputError):
    pass


class NonUniformGrid(InputError):
    pass


class GridMismatch(InputError):
    pass


class EmptyDataset(InputError):
    pass


class InsufficientData(InputError):
    pass


class LengthMismatch(InputError):
    pass


class NonpositiveTruth(InputError):
    pass


class EmptyLoad(InputError):
    pass


class CalibrationFailed(InputError):
    """The requested censoring rate cannot be reached by the censoring family."""


class EmptyBall(EstimationError):
    """No training curve lies within the bandwidth of the query curve."""


class EmptyNeighborhood(EstimationError):
    """All kernel weights vanish at the query curve; the bandwidth is too small."""


class SaturatedQuantile(EstimationError):
    """The estimated conditional CDF never reaches the requested level."""


class DegenerateDensity(EstimationError):
    pass


class NonpositiveVariance(EstimationError):
    pass


class AllFoldsEmpty(EstimationError):
    """Cross-validation produced no usable score for any candidate."""


class SaturatedWarning(UserWarning):
    """Emitted when a quantile search hits the right end of its bracket."""
