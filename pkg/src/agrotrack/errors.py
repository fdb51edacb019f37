"""
Error hierarchy for agrotrack.

Every error carries the process exit code the command line maps it to, so
the CLI boundary can turn a failed run into a stable status without
inspecting messages.
"""

from typing import ClassVar

# ============================================================================
# Exit codes
# ============================================================================

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


# ============================================================================
# Errors
# ============================================================================


class AgroTrackError(Exception):
    """Base class for every error raised by agrotrack."""

    exit_code: ClassVar[int] = EXIT_INTERNAL
    kind: ClassVar[str] = "internal"


class DomainError(AgroTrackError, ValueError):
    """A physical quantity is outside the domain of a model."""

    exit_code = EXIT_INFEASIBLE
    kind = "domain"


class InfeasibleError(AgroTrackError):
    """A request cannot be satisfied under the model's bounds."""

    exit_code = EXIT_INFEASIBLE
    kind = "infeasible"


class ValidationError(AgroTrackError, ValueError):
    """
    An input document or argument set failed validation.

    Holds every violation found, not only the first one.
    """

    exit_code = EXIT_INPUT
    kind = "validation"

    def __init__(self, violations: list[str]) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InsufficientDataError(AgroTrackError, ValueError):
    exit_code = EXIT_INPUT
    kind = "insufficient_data"


class IllPosedError(AgroTrackError, ValueError):
    exit_code = EXIT_INPUT
    kind = "ill_posed"


class OrderingError(AgroTrackError, ValueError):
    """Packets for one animal arrived out of time order."""

    exit_code = EXIT_INPUT
    kind = "ordering"


class UndefinedMetricError(AgroTrackError, ValueError):
    exit_code = EXIT_INPUT
    kind = "undefined_metric"


class ResourceError(AgroTrackError):
    """A hard resource bound (event queue size) was exceeded."""

    exit_code = EXIT_INTERNAL
    kind = "resource"


def exit_code_for(error: BaseException) -> int:
    """Map any exception to a CLI exit code."""
    if isinstance(error, AgroTrackError):
        return error.exit_code
    return EXIT_INTERNAL


__all__ = [
    "EXIT_INFEASIBLE",
    "EXIT_INPUT",
    "EXIT_INTERNAL",
    "EXIT_OK",
    "AgroTrackError",
    "DomainError",
    "IllPosedError",
    "InfeasibleError",
    "InsufficientDataError",
    "OrderingError",
    "ResourceError",
    "UndefinedMetricError",
    "ValidationError",
    "exit_code_for",
]
