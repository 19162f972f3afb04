"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: configuration/analysis problems exit
with 2, numerical failures (divergence, physically impossible states)
with 3.
"""


class RingTrafficError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(RingTrafficError):
    """Invalid parameters, dimensions, or config-file contents."""


class AnalysisError(RingTrafficError):
    """A well-formed input that the analysis cannot accept
    (e.g. degenerate linearization coefficients, non-circulant matrix)."""


class DivergenceError(RingTrafficError):
    """Numerical integration produced a non-finite or runaway state."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class PhysicalViolationError(RingTrafficError):
    """Simulated state left the physically meaningful region
    (e.g. a vehicle spacing became non-positive)."""
