"""Exception types shared across the package."""


class DriftlessError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(DriftlessError, ValueError):
    """Vector-field matrix shape disagrees with the declared dimensions."""


class DomainError(DriftlessError, ValueError):
    """Argument lies outside the mathematical domain of the function."""


class RangeError(DriftlessError, ValueError):
    """Argument lies outside the supported evaluation range."""


class DegenerateAttitudeError(DriftlessError, ValueError):
    """The attitude is identically zero; use the degenerate closed form."""


class DivergenceError(DriftlessError, RuntimeError):
    """State norm exceeded the divergence guard during integration.

    Carries the partial trajectory computed up to the abort point.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class SwitchTimeoutError(DriftlessError, RuntimeError):
    """The switching condition was never met before the time horizon."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class InconclusiveError(DriftlessError, RuntimeError):
    """Trajectory too short for the requested certificate."""
