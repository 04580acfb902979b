"""Exception types raised across the package."""


class OscarError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OscarError, ValueError):
    """An argument violates a documented precondition."""


class LandscapeFormatError(OscarError, ValueError):
    """A landscape file is malformed, truncated, or of an unsupported version."""


class DegenerateLandscapeError(OscarError, ValueError):
    """The reference landscape has zero interquartile range, so NRMSE is undefined."""


class DegenerateFitError(OscarError, ValueError):
    """A regression was asked to fit a constant regressor."""


class NonFiniteObjectiveError(OscarError, ArithmeticError):
    """An optimizer objective returned NaN or infinity."""
