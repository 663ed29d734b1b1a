"""Exception and warning classes raised across the package."""


class ScObstacleError(Exception):
    """Base class for all package errors."""


class InvalidInput(ScObstacleError, ValueError):
    """Input data failed validation."""


class DimensionMismatch(InvalidInput):
    pass


class NonPositiveRho(InvalidInput):
    pass


class DegenerateGamma(InvalidInput):
    pass


class InvalidProfile(InvalidInput):
    pass


class InvalidPotential(InvalidInput):
    pass


class UnboundedRatio(InvalidInput):
    pass


class InvalidMesh(InvalidInput):
    pass


class AlphaAtCriticalValue(InvalidInput):
    pass


class AlphaOutOfRange(InvalidInput):
    pass


class BetaOutOfRange(InvalidInput):
    pass


class InvalidBounds(InvalidInput):
    pass


class InsufficientRange(InvalidInput):
    pass


class CoincidentPoints(InvalidInput):
    pass


class BracketFailure(ScObstacleError):
    """A sign change required for bisection was not found."""


class RootNotBracketed(BracketFailure):
    pass


class PackingFailure(ScObstacleError):
    """Points could not be placed with the requested separation."""


class NotConverged(ScObstacleError):
    """An iterative solver hit its sweep budget.

    Attributes
    ----------
    max_sweeps : int
    residual : float
        Largest pointwise update of the last sweep.
    partial : object or None
        The last iterate, when available.
    """

    def __init__(self, max_sweeps, residual, partial=None):
        super().__init__(
            f"not converged after {max_sweeps} sweeps (last max update {residual:.3e})"
        )
        self.max_sweeps = max_sweeps
        self.residual = residual
        self.partial = partial


class NondegeneracyViolated(UserWarning):
    """The field fails |H| + |grad H| > 0 somewhere on the mesh."""
