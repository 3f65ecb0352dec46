"""Error types raised by the lab.

Every error carries the exit code the command line reports for it:
1 for a failed verification, 2 for configuration problems and 3 for
numerical non-convergence.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class HypdynError(Exception):
    """Base class for lab errors."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.details: Dict[str, Any] = dict(details or {})


class ConfigurationError(HypdynError, ValueError):
    exit_code = 2


class DomainError(ConfigurationError):
    """A point lies outside the domain of its space."""


class InvalidLabel(ConfigurationError):
    """A boundary label is not known to the space."""


class ExactModeUnavailable(ConfigurationError):
    """Exact Julia verification was requested where it does not apply."""


class NotElliptic(ConfigurationError):
    """An operation that needs bounded orbits got an escaping map."""


class NumericalError(HypdynError):
    exit_code = 3


class BusemannNotAvailable(NumericalError):
    """No closed-form Busemann function for this label."""


class TailNotConverged(NumericalError):
    """A truncated limit did not settle within tolerance."""


class MonotonicityViolated(NumericalError):
    """A trace that must be monotone was not."""


class SolverFailed(NumericalError):
    """No preimage was found within the residual tolerance."""


class ClustersDiverged(NumericalError):
    """Pulled-back families did not settle into a common orbit."""


class ClassificationUndetermined(NumericalError):
    """Finite data could not decide between bounded and escaping orbits."""


class VerificationFailure(HypdynError):
    exit_code = 1


class NotNonExpanding(VerificationFailure):
    """A sampled pair witnessed d(f(p), f(q)) > d(p, q)."""


class NoRepellingCertificate(VerificationFailure):
    """The boundary point is not certified as repelling."""
