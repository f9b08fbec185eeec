"""Exception types shared across the package."""


class GefsampError(Exception):
    """Base class for all package-specific errors."""


class EvaluationOverflowError(GefsampError, OverflowError):
    """A weighted evaluation produced a non-finite value.

    Carries the offending log-magnitude so callers can diagnose how far out
    of double range the computation went.
    """

    def __init__(self, log_magnitude, where=""):
        self.log_magnitude = float(log_magnitude)
        msg = f"non-finite result, log-magnitude {self.log_magnitude:.3g}"
        if where:
            msg += f" at {where}"
        super().__init__(msg)


class QuadratureError(GefsampError, ValueError):
    """Quadrature spec violates a precondition (e.g. cutoff too small)."""


class DomainError(GefsampError, ValueError):
    """Arguments outside the mathematical domain of an operation."""


class ResourceLimitError(GefsampError, RuntimeError):
    """Adaptive work would exceed a hard cap."""


class NonConvergenceError(GefsampError, RuntimeError):
    """An iteration failed to converge; carries the iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class ContourError(GefsampError, RuntimeError):
    """A contour could not be placed clear of zeros."""


class InsufficientPointsError(GefsampError, ValueError):
    """Too few points for the requested statistic."""


class CoincidentPointError(GefsampError, ValueError):
    """Coincident evaluation points made a covariance matrix singular."""


class DegenerateModelError(GefsampError, ValueError):
    """A GAF model with a vanishing coefficient where a positive one is required."""


class IncompleteDataError(GefsampError, ValueError):
    """Required samples are missing; carries the missing indices."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"missing samples for indices {self.missing}")
