"""Transfer-matrix simulator for membrane arrays and optomechanical crystals."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DegenerateMatrixError,
    DegeneratePointError,
    InvalidInputError,
    TrackingError,
)
from .tmat import SystemSpec, chain, reflectivity, transmission

__all__ = [
    "__version__",
    "ConvergenceError",
    "DegenerateMatrixError",
    "DegeneratePointError",
    "InvalidInputError",
    "TrackingError",
    "SystemSpec",
    "chain",
    "reflectivity",
    "transmission",
]
