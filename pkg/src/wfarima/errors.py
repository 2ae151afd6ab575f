"""Exception types raised by the estimation pipeline."""

from __future__ import annotations


class FarimaError(Exception):
    """Base class for numerical failures in the package."""


class InvalidParameterError(FarimaError, ValueError):
    """Parameter vector or configuration outside its admissible set."""


class DegenerateInputError(FarimaError, ValueError):
    """Data that cannot identify the model (constant or too short)."""


class ConvergenceError(FarimaError):
    """The optimizer stopped without meeting the convergence criteria.

    ``best`` holds the best iterate seen (a :class:`~wfarima.model.ParamVector`)
    and ``value`` its objective.
    """

    def __init__(self, message, best=None, value=None):
        super().__init__(message)
        self.best = best
        self.value = value


class NearSingularCurvatureError(FarimaError):
    """Curvature matrix too ill-conditioned for a Newton step."""


class ExperimentUnstableError(FarimaError):
    """Too many replications of a Monte Carlo experiment failed."""
