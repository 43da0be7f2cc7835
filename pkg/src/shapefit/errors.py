"""Exception types shared across the package."""


class ShapeFitError(Exception):
    """Base class for all errors raised by this package."""


class DegeneratePair(ShapeFitError):
    """Two points coincide (numerically) where a direction or span is needed."""


class ZeroReference(ShapeFitError):
    """Reference difference vector is numerically zero."""


class EmptySet(ShapeFitError):
    """A required pair set is empty."""


class InvalidGamma(ShapeFitError):
    """Adversarial corruption budget outside [0, 1/2)."""


class RankDeficient(ShapeFitError):
    """Constraint normals are numerically rank deficient."""


class DisconnectedGraph(ShapeFitError):
    """Observation graph is disconnected, so the program has no unique minimizer."""


class ZeroNorm(ShapeFitError):
    """Zero-norm input where a normalization is required."""
