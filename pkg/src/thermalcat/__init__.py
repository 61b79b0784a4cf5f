"""Atom-field simulations of cat states built from displaced thermal fields."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    ProgramError,
    SeriesError,
    ThermalcatError,
    ToleranceError,
    TruncationError,
)

__all__ = [
    "DomainError",
    "ProgramError",
    "SeriesError",
    "ThermalcatError",
    "ToleranceError",
    "TruncationError",
    "__version__",
]
