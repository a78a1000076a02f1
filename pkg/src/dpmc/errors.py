"""Exception hierarchy shared by all dpmc modules."""


class DpmcError(Exception):
    """Base class for every error raised by dpmc."""


class DomainError(DpmcError, ValueError):
    """An argument lies outside the domain of the operation."""


class ShapeError(DpmcError, ValueError):
    """Matrix dimensions do not conform."""


class BracketError(DpmcError, ValueError):
    """The target value is not bracketed by the search interval."""


class ConvergenceError(DpmcError, RuntimeError):
    """An iterative routine hit its iteration cap."""


class ConditioningError(DpmcError, ValueError):
    """A covariance factor is singular or numerically singular."""


class DegenerateSubspaceError(DpmcError, ValueError):
    """A utility subspace has no nonzero singular value."""


class ScaleError(DpmcError, ValueError):
    """A brute-force oracle was asked to run beyond its supported size."""


class MatrixFormatError(DpmcError, ValueError):
    """A matrix file does not follow the ``# rows=<m> cols=<n>`` CSV format."""
