"""Exception hierarchy shared across the package."""


class GaboError(Exception):
    """Base class for all errors raised by gabo."""


class ManifoldMismatchError(GaboError, ValueError):
    """Point or tangent vector does not belong to the expected manifold."""


class DegenerateGeodesicError(GaboError, ArithmeticError):
    """The minimizing geodesic between two points is not unique (antipodal points)."""


class NonSPDError(GaboError, ArithmeticError):
    """A matrix expected to be SPD has drifted to non-positive eigenvalues."""


class InfeasibleProjectionError(GaboError, ValueError):
    """No point of the domain can be reached by the projection rule."""


class NotPositiveDefiniteError(GaboError, ArithmeticError):
    """Cholesky factorization of a covariance matrix failed."""


class FittingError(GaboError, RuntimeError):
    """Every restart of the hyperparameter search failed."""


class ThresholdNotFoundError(GaboError, RuntimeError):
    """No lengthscale on the probed grid gave 100% positive-definite Gram matrices."""

    def __init__(self, message, table):
        super().__init__(message)
        self.table = table
