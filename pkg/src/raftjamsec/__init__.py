"""Coverage, authentication and consensus analysis for a RAFT IoT network
under jamming and impersonation attacks."""

from .errors import DegenerateGeometryError, DomainError, QuadratureError, UnsupportedExponentError

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "UnsupportedExponentError",
    "DegenerateGeometryError",
    "QuadratureError",
    "__version__",
]
