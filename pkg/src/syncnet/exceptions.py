"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`SyncnetError`; the CLI maps subclasses of :class:`ValidationError`
to exit status 1 and everything else to exit status 2.
"""


class SyncnetError(Exception):
    """Base class for all package errors."""


class ValidationError(SyncnetError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad parameters."""


class DimensionError(ValidationError):
    """Shapes do not agree (non-square matrix, mismatched node dimension)."""


class RangeError(ValidationError):
    """Parameter outside the range the implementation supports."""


class DomainError(SyncnetError, ValueError):
    """Input is well formed but outside the domain where the result exists."""


class DisconnectedError(DomainError):
    """The network has more than one connected component."""


class SpectralConsistencyError(DomainError):
    """A spectrum does not have the structure a Laplacian must have."""


class SingularMatrixError(SyncnetError, ArithmeticError):
    """Matrix is numerically singular.

    Attributes
    ----------
    sigma_min : float
        Smallest singular value of the offending matrix.
    """

    def __init__(self, message, sigma_min):
        super().__init__(message)
        self.sigma_min = sigma_min


class NumericalError(SyncnetError, ArithmeticError):
    """An iterative routine failed to converge."""


class ConsistencyError(SyncnetError, AssertionError):
    """An internal identity that must hold by construction was violated."""


class NoThresholdError(SyncnetError):
    """No synchronising coupling could be bracketed within the search cap."""
