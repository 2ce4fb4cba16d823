"""Exception hierarchy.

Every error raised on a domain path derives from :class:`MalabError`; the CLI
turns these into a single machine-parsable line and exit code 1.
"""


class MalabError(Exception):
    """Base class for domain errors."""

    kind = "MalabError"

    def __str__(self):
        return super().__str__()


class DomainError(MalabError, ValueError):
    kind = "DomainError"


class OutOfDomainError(DomainError):
    kind = "OutOfDomain"


class ConvexityError(DomainError):
    kind = "ConvexityViolation"


class NonIntegrableError(DomainError):
    kind = "NonIntegrableDensity"


class PreconditionError(DomainError):
    kind = "PreconditionViolated"


class InfeasibleError(DomainError):
    kind = "Infeasible"


class ConeViolationError(DomainError):
    kind = "ConeViolation"


class NormalizationError(DomainError):
    kind = "Normalization"


class GridMismatchError(DomainError):
    kind = "GridMismatch"


class DegenerateScheduleError(DomainError):
    kind = "DegenerateSchedule"


class ConvergenceError(MalabError, RuntimeError):
    """Iteration did not reach its tolerance.  ``history`` holds residuals."""

    kind = "NonConvergence"

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class DampingError(ConvergenceError):
    kind = "DampingFailure"


class KConditionError(DomainError):
    kind = "KConditionFailure"


class BTooSmallError(DomainError):
    kind = "BTooSmall"

    def __init__(self, message, suggested_B=None):
        super().__init__(message)
        self.suggested_B = suggested_B


class RangeError(DomainError):
    kind = "RangeError"
