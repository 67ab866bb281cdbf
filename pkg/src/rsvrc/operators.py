"""Self-adjoint linear operators on a single tangent space."""

from __future__ import annotations

import numpy as np

from .manifolds import Euclidean, Manifold, TangentBasis, TangentVector, same_point
from .errors import ContractViolation


def sym(m):
    return 0.5 * (m + m.T)


class HessianOperator:
    """Linear map ``T_x M -> T_x M``; subclasses implement :meth:`apply_stack`."""

    def __init__(self, manifold: Manifold, base: np.ndarray):
        self.manifold = manifold
        self.base = base

    def apply_stack(self, stack: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, u: TangentVector) -> TangentVector:
        if not same_point(self.base, u.base, self.manifold.tol_manifold):
            raise ContractViolation("operator applied to a vector from another tangent space")
        return TangentVector(self.base, self.apply_stack(u.ambient[None])[0])

    __call__ = apply

    def matrix(self, basis: TangentBasis, symmetrize: bool = True) -> np.ndarray:
        """Coordinate matrix ``M[i, j] = <b_i, H b_j>`` in an orthonormal basis."""
        if not same_point(self.base, basis.base, self.manifold.tol_manifold):
            raise ContractViolation("basis belongs to another tangent space")
        m = basis.coords_stack(self.apply_stack(basis.vectors))
        return sym(m) if symmetrize else m


class MatrixOperator(HessianOperator):
    """Explicit symmetric matrix acting on R^k (coordinates of a tangent space)."""

    def __init__(self, mat, base=None):
        mat = np.asarray(mat, dtype=float)
        k = mat.shape[0]
        super().__init__(Euclidean(k), np.zeros(k) if base is None else base)
        self.mat = mat

    def apply_stack(self, stack):
        return stack @ self.mat.T

    def matrix(self, basis, symmetrize=True):
        if np.array_equal(basis.vectors, np.eye(self.mat.shape[0])):
            return sym(self.mat) if symmetrize else self.mat.copy()
        return super().matrix(basis, symmetrize)


class RiemannianHessian(HessianOperator):
    """Riemannian Hessian built from a batch of Euclidean derivatives.

    Applying the operator is free in oracle terms: the batch object already
    holds everything one second-order oracle call returns.
    """

    def __init__(self, manifold, base, batch):
        super().__init__(manifold, base)
        self.batch = batch

    def apply_stack(self, stack):
        ehess = self.batch.ehess_stack(stack)
        return self.manifold.ehess2rhess(self.base, self.batch.egrad, ehess, stack)

    def gradient(self) -> TangentVector:
        return TangentVector(self.base, self.manifold.egrad2rgrad(self.base, self.batch.egrad))
