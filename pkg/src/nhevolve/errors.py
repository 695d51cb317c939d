"""Exception hierarchy.

Usage errors (bad arguments, malformed config) derive from
:class:`UsageError`; conditions arising from the physics of a run (frames
too close to an exceptional point, indeterminate classifications, overflow
of a matrix exponential) derive from :class:`PhysicsError`.  The CLI maps
usage errors to exit code 1 and physics errors to exit code 2.
"""


class NhevolveError(Exception):
    """Base class for all package errors."""


class UsageError(NhevolveError, ValueError):
    """Invalid arguments or inconsistent inputs."""


class ArgumentError(UsageError):
    """Operation precondition violated by the caller."""


class ConfigError(UsageError):
    """Malformed or unknown-key configuration document."""


class PhysicsError(NhevolveError):
    """Run failed for a physical/numerical reason, not caller misuse."""


class SingularMatrixError(PhysicsError):
    """Matrix inversion rejected; carries the condition estimate."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConvergenceError(PhysicsError):
    """Eigensolver failed to meet its residual bound."""


class NearEPError(PhysicsError):
    """Eigenvector frame too ill-conditioned: an exceptional or degeneracy
    point lies too close to the requested parameter point."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BranchAmbiguityError(PhysicsError):
    """Eigenvector-overlap branch matching could not label a grid point."""

    def __init__(self, message, grid_index=None):
        super().__init__(message)
        self.grid_index = grid_index


class IndeterminateEndpointError(PhysicsError):
    """No single branch dominates the decay-rate spectrum at the end of the
    trajectory, down to the minimum classification window."""


class MagnitudeError(PhysicsError):
    """Matrix exponential would overflow; the caller must pre-scale."""
