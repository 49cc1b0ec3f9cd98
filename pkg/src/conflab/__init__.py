"""Numerical checks for sigma_k curvature with the B_k boundary operator on the half-space."""

__version__ = "0.1.0"

from .errors import ConflabError, DomainError, ParseError, PreconditionError, ResolutionError, NoRootError
from .report import CheckReport

__all__ = [
    "__version__",
    "CheckReport",
    "ConflabError",
    "DomainError",
    "NoRootError",
    "ParseError",
    "PreconditionError",
    "ResolutionError",
]
