from .base import (
    TOL_MANIFOLD,
    TOL_ROUNDTRIP,
    TOL_TANGENT,
    Manifold,
    TangentBasis,
    TangentVector,
    same_point,
)
from .euclidean import Euclidean
from .spd import SPD
from .sphere import Sphere

__all__ = [
    "Manifold",
    "TangentVector",
    "TangentBasis",
    "Sphere",
    "SPD",
    "Euclidean",
    "same_point",
    "TOL_MANIFOLD",
    "TOL_TANGENT",
    "TOL_ROUNDTRIP",
]
