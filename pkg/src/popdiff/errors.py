"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: parse/format errors are 2,
exhausted retries 3, infeasible parameters 4, degenerate Bohr collapse 5.
"""


class PopdiffError(Exception):
    pass


class DomainError(PopdiffError, ValueError):
    """Domain kind or size does not admit the requested operation."""


class FileFormatError(PopdiffError, ValueError):
    """Artifact file is malformed or of the wrong kind."""


class InfeasibleError(PopdiffError, ValueError):
    """Parameters fail a fatal feasibility requirement."""


class RetriesExhausted(PopdiffError, RuntimeError):
    """A randomized construction failed verification on every attempt.

    Carries a ``log`` dict with the failing level/step and the best attempt
    seen, so callers can report what was measured.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log or {}


class DegenerateBohrError(PopdiffError, RuntimeError):
    """A Bohr set collapsed to {0}, leaving no nonzero difference to return."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class RegularityError(PopdiffError, RuntimeError):
    """No regular scale was found where one is guaranteed to exist."""


class SmoothSamplingError(PopdiffError, RuntimeError):
    """Rejection sampling for a smooth coefficient tuple ran out of tries."""
