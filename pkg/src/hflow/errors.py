"""Exception hierarchy shared across the package."""


class HflowError(Exception):
    """Base class for all package errors."""


class OutOfChart(HflowError):
    """Event lies outside the validity domain of the spacetime chart."""


class DegenerateSpec(HflowError):
    """Surface family parameters produce a degenerate embedding."""


class DegenerateInducedMetric(HflowError):
    """Induced metric is not positive definite somewhere on the grid."""


class NotAdmissible(HflowError):
    """Mean curvature vector fails to be spacelike somewhere on the surface."""

    def __init__(self, msg, min_value=None, location=None):
        super().__init__(msg)
        self.min_value = min_value
        self.location = location


class NotNormal(HflowError):
    """Vector handed to a normal-bundle operation has a tangential part."""


class Incompatible(HflowError):
    """Poisson right-hand side violates the closed-surface solvability condition."""


class NoConvergence(HflowError):
    """Iterative solver failed to reach the requested residual."""

    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class AmbiguousTopology(HflowError):
    """Curvature integral does not cleanly round to an Euler characteristic."""


class TopologyMismatch(HflowError):
    """Operation requires a topological sphere but the surface is not one."""


class BetaOutOfRange(HflowError):
    """Resolved tilt function exceeds the spacelike-flow bound."""


class ThetaNotMonotone(HflowError):
    """Frame-angle reparametrization is not nondecreasing on (-1, 1)."""


class StepFailed(HflowError):
    """Flow step was rejected after exhausting all retries."""


class ConfigError(HflowError):
    """Run configuration failed schema or semantic validation."""
