"""Exception types shared across the package."""


class AdbmaError(Exception):
    """Base class for all package errors."""


class RankDeficient(AdbmaError):
    """X_gamma'X_gamma is numerically singular for the requested model."""


class ModelTooLarge(AdbmaError):
    """Model size exceeds n - 2, so the marginal likelihood is undefined."""


class NonPositiveResidual(AdbmaError):
    """The residual sum-of-squares term came out non-positive (numerical breakdown)."""


class NoSolution(AdbmaError):
    """The model-prior moment equations have no solution for the given (p, kappa)."""


class InvalidMeasure(AdbmaError):
    """A descriptive-measure vector contains negative or non-finite entries."""


class DegenerateSeries(AdbmaError):
    """A series has (near-)zero sample variance; autocorrelation time is undefined."""


class EmptyChain(AdbmaError):
    """A chain output contains no samples."""


class NoMonitoredCoordinates(AdbmaError):
    """No coordinate clears the PIP threshold with a usable series."""


class UnknownBaseline(AdbmaError):
    """A baseline name in the efficiency report does not match any run."""


class TooManyVariables(AdbmaError):
    """Exhaustive enumeration was requested above the supported variable cap."""


class TooFewColumns(AdbmaError):
    """The simulated-response generator needs at least 7 design columns."""


class ParseError(AdbmaError):
    """A CSV file is malformed or contains a non-numeric cell."""


class MissingColumn(AdbmaError):
    """The requested response column is not in the CSV header."""


class ConstantColumn(AdbmaError):
    """A regressor column has zero variance and is unidentifiable after demeaning."""
