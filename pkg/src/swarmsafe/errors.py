"""Exception types shared across the package."""


class SwarmSafeError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SwarmSafeError):
    """An argument violates a documented precondition."""


class InfeasibleConstraintError(SwarmSafeError):
    """A safety constraint cannot be satisfied by any control."""

    def __init__(self, message, constraint_index=None, violation=None):
        super().__init__(message)
        self.constraint_index = constraint_index
        self.violation = violation


class CertificateUnavailableError(SwarmSafeError):
    """The monotonicity precondition of the mass-bound certificate fails."""


class PlacementInfeasibleError(SwarmSafeError):
    """Obstacle rejection sampling exceeded its attempt budget."""


class SetupError(SwarmSafeError):
    """A simulation was started from a state violating its own barriers."""
