"""Manifold abstraction shared by every concrete geometry.

Points are plain numpy arrays in the ambient space. Tangent vectors are
:class:`TangentVector` instances that carry their base point, so any operation
that mixes vectors from different tangent spaces fails loudly instead of
silently producing garbage (a classic parallel-transport bug).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation, DomainError

TOL_MANIFOLD = 1e-10
TOL_TANGENT = 1e-10
TOL_ROUNDTRIP = 1e-8


def same_point(x: np.ndarray, y: np.ndarray, tol: float = TOL_MANIFOLD) -> bool:
    if x is y:
        return True
    if x.shape != y.shape:
        return False
    scale = 1.0 + float(np.max(np.abs(x)))
    return float(np.max(np.abs(x - y))) <= tol * scale


def _require_same_base(a: np.ndarray, b: np.ndarray) -> None:
    if not same_point(a, b):
        raise ContractViolation("tangent vectors live at different base points")


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Ambient representation of a tangent vector, paired with its base point."""

    base: np.ndarray
    ambient: np.ndarray

    def __add__(self, other: TangentVector) -> TangentVector:
        _require_same_base(self.base, other.base)
        return TangentVector(self.base, self.ambient + other.ambient)

    def __sub__(self, other: TangentVector) -> TangentVector:
        _require_same_base(self.base, other.base)
        return TangentVector(self.base, self.ambient - other.ambient)

    def __neg__(self) -> TangentVector:
        return TangentVector(self.base, -self.ambient)

    def __mul__(self, alpha: float) -> TangentVector:
        return TangentVector(self.base, alpha * self.ambient)

    __rmul__ = __mul__

    def __truediv__(self, alpha: float) -> TangentVector:
        return TangentVector(self.base, self.ambient / alpha)


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Orthonormal basis of one tangent space, stored as a stack ``(k, *shape)``."""

    manifold: Manifold
    base: np.ndarray
    vectors: np.ndarray

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def coords(self, u: TangentVector) -> np.ndarray:
        _require_same_base(self.base, u.base)
        return self.manifold.gram(self.base, self.vectors, u.ambient[None])[:, 0]

    def coords_stack(self, stack: np.ndarray) -> np.ndarray:
        """Coordinates of every vector in ``stack``; column ``j`` belongs to ``stack[j]``."""
        return self.manifold.gram(self.base, self.vectors, stack)

    def combine(self, c: np.ndarray) -> TangentVector:
        return TangentVector(self.base, np.tensordot(c, self.vectors, axes=1))


class Manifold(abc.ABC):
    """Riemannian submanifold of a Euclidean space with exact geometry.

    Subclasses implement the underscore primitives on raw arrays; the public
    methods add base-point validation and wrap results in
    :class:`TangentVector`.
    """

    name: str = "manifold"
    dim: int
    injectivity_radius: float
    point_shape: tuple

    def __init__(self, tol_manifold: float = TOL_MANIFOLD, tol_tangent: float = TOL_TANGENT):
        self.tol_manifold = tol_manifold
        self.tol_tangent = tol_tangent

    # ---- primitives -----------------------------------------------------
    @abc.abstractmethod
    def _exp(self, x, v): ...

    @abc.abstractmethod
    def _log(self, x, y): ...

    @abc.abstractmethod
    def _transport_stack(self, x, y, stack): ...

    @abc.abstractmethod
    def _project(self, x, w): ...

    @abc.abstractmethod
    def gram(self, x, left, right) -> np.ndarray:
        """Matrix of metric inner products ``<left[i], right[j]>_x``."""

    @abc.abstractmethod
    def distance(self, x, y) -> float: ...

    @abc.abstractmethod
    def check_point(self, x) -> None:
        """Raise :class:`DomainError` unless ``x`` lies on the manifold."""

    @abc.abstractmethod
    def tangent_residual(self, x, w) -> float:
        """Distance of ambient ``w`` from the tangent space at ``x``."""

    @abc.abstractmethod
    def basis_vectors(self, x) -> np.ndarray: ...

    @abc.abstractmethod
    def egrad2rgrad(self, x, egrad): ...

    @abc.abstractmethod
    def ehess2rhess(self, x, egrad, ehess_u, u):
        """Riemannian Hessian applied to ``u`` from Euclidean derivatives.

        ``ehess_u`` and ``u`` may be stacks ``(k, *shape)``.
        """

    @abc.abstractmethod
    def random_point(self, rng: np.random.Generator) -> np.ndarray: ...

    # ---- public API -------------------------------------------------------
    def tangent(self, x, ambient, check: bool = True) -> TangentVector:
        ambient = np.asarray(ambient, dtype=float)
        if ambient.shape != x.shape:
            raise ContractViolation(f"tangent shape {ambient.shape} != point shape {x.shape}")
        if check:
            res = self.tangent_residual(x, ambient)
            if res > self.tol_tangent * max(1.0, float(np.max(np.abs(ambient)))):
                raise ContractViolation(f"vector is not tangent (residual {res:.3e})")
        return TangentVector(x, ambient)

    def zero(self, x) -> TangentVector:
        return TangentVector(x, np.zeros_like(x))

    def _check_base(self, x, *vectors: TangentVector) -> None:
        for u in vectors:
            if not same_point(x, u.base, self.tol_manifold):
                raise ContractViolation("tangent vector is not based at the given point")

    def inner(self, x, u: TangentVector, v: TangentVector) -> float:
        self._check_base(x, u, v)
        return float(self.gram(x, u.ambient[None], v.ambient[None])[0, 0])

    def norm(self, x, u: TangentVector) -> float:
        return float(np.sqrt(max(self.inner(x, u, u), 0.0)))

    def exp(self, x, v: TangentVector) -> np.ndarray:
        self._check_base(x, v)
        return self._exp(x, v.ambient)

    def log(self, x, y) -> TangentVector:
        return TangentVector(x, self._log(x, y))

    def transport(self, x, y, u: TangentVector) -> TangentVector:
        self._check_base(x, u)
        return TangentVector(y, self._transport_stack(x, y, u.ambient[None])[0])

    def transport_stack(self, x, y, stack: np.ndarray) -> np.ndarray:
        return self._transport_stack(x, y, stack)

    def project(self, x, w) -> TangentVector:
        return TangentVector(x, self._project(x, np.asarray(w, dtype=float)))

    def random_tangent(self, x, rng: np.random.Generator) -> TangentVector:
        w = rng.standard_normal(x.shape)
        u = self._project(x, w)
        nrm = np.sqrt(self.gram(x, u[None], u[None])[0, 0])
        return TangentVector(x, u / nrm)

    def tangent_basis(self, x) -> TangentBasis:
        return TangentBasis(self, x, self.basis_vectors(x))

    def transport_basis(self, basis: TangentBasis, y) -> TangentBasis:
        return TangentBasis(self, y, self._transport_stack(basis.base, y, basis.vectors))

    def _require_inside_injectivity(self, x, y) -> None:
        if np.isfinite(self.injectivity_radius):
            d = self.distance(x, y)
            if d >= self.injectivity_radius - 1e-8:
                raise DomainError(
                    f"points are {d:.6g} apart, outside injectivity radius "
                    f"{self.injectivity_radius:.6g}"
                )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"
