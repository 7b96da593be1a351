"""Exception types shared across the package."""


class LatscatError(Exception):
    """Base class for package errors."""


class BandEdgeError(LatscatError, ValueError):
    """Evaluation requested exactly at (or too close to) a spectral band edge."""


class DegenerateEigenvaluesError(LatscatError, ArithmeticError):
    """2x2 eigenvalue pair closer than the configured degeneracy tolerance."""


class SingularMatrixError(LatscatError, ArithmeticError):
    """Zero pivot met while factoring; the matrix is numerically singular."""


class SupportOverflowError(LatscatError, ValueError):
    """A finite model was requested that cannot contain the potential support."""


class ConvergenceError(LatscatError, RuntimeError):
    """An iterative refinement loop failed to stabilize."""
