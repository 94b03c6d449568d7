"""Numerical Borel-Laplace resummation and resurgence toolkit."""

from .core import (
    Arc,
    CertificateError,
    Direction,
    FilteredSingularitySet,
    GevreySeries,
    NumericalError,
    PinchError,
    Precision,
    ResurgeError,
    ValidationError,
    copolar,
    filtered_set_iterate,
    filtered_set_sum,
)
from .borel import (
    Major,
    Microfunction,
    Minor,
    ResurgentSymbol,
    SymbolTerm,
    borel_transform,
    major_of_log,
    major_of_power,
    minor_of_series,
)

__all__ = [
    "Arc", "CertificateError", "Direction", "FilteredSingularitySet", "GevreySeries", "NumericalError",
    "PinchError", "Precision", "ResurgeError", "ValidationError", "copolar", "filtered_set_iterate",
    "filtered_set_sum", "Major", "Microfunction", "Minor", "ResurgentSymbol", "SymbolTerm", "borel_transform",
    "major_of_log", "major_of_power", "minor_of_series",
]

__version__ = "0.1.0"
