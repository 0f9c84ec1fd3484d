"""Exception types shared across the package."""


class NodalCensusError(Exception):
    """Base class for package errors."""


class DomainError(NodalCensusError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class CapabilityError(NodalCensusError):
    """The request exceeds a configured capability (degree cap, dimension...)."""


class DegenerateEnsembleError(NodalCensusError):
    """The ensemble carries no usable mass for the requested quantity."""


class NumericError(NodalCensusError):
    """A numerical procedure failed to converge or overflowed."""


class ResolutionError(NodalCensusError):
    """A sampling resolution is insufficient for the requested degree."""


class TrialFlagged(NodalCensusError):
    """A Monte-Carlo trial hit a degenerate configuration and must be excluded."""
