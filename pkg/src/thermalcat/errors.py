"""Exception hierarchy. CLI exit codes hang off the subclasses."""


class ThermalcatError(Exception):
    exit_code = 1


class DomainError(ThermalcatError, ValueError):
    """Input outside an operation's domain (shape, hermiticity, positivity)."""


class TruncationError(ThermalcatError):
    """Fock truncation too small for the requested state or dynamics."""

    exit_code = 3


class SeriesError(ThermalcatError):
    """A series was cut off before converging."""

    exit_code = 3


class ToleranceError(ThermalcatError):
    """A numerical invariant drifted past its tolerance."""

    exit_code = 4


class ProgramError(ThermalcatError):
    """Pulse-program parse or validation failure.

    ``location`` is a human-readable pointer such as ``line 7`` or
    ``steps[3].evolve.duration``.
    """

    exit_code = 2

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
