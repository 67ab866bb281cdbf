"""Symmetric positive definite matrices with the affine-invariant metric.

Metric: ``<U, V>_X = tr(X^-1 U X^-1 V)``. Every matrix function goes through a
symmetric eigendecomposition, so expm, logm and square roots share one code
path.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation, DomainError
from .base import Manifold

PD_RELATIVE_FLOOR = 1e-12


def sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _eigh_pd(x):
    lam, vec = np.linalg.eigh(sym(x))
    if not np.all(np.isfinite(lam)) or lam[0] <= PD_RELATIVE_FLOOR * max(lam[-1], 0.0) or lam[-1] <= 0:
        raise DomainError(f"matrix is not positive definite (eigenvalues {lam[0]:.3e} .. {lam[-1]:.3e})")
    return lam, vec


def symfun(x, fn):
    """Apply ``fn`` to the eigenvalues of the symmetric matrix ``x``."""
    lam, vec = np.linalg.eigh(sym(x))
    return (vec * fn(lam)) @ vec.T


def expm_sym(x):
    return symfun(x, np.exp)


def logm_pd(x):
    lam, vec = _eigh_pd(x)
    return (vec * np.log(lam)) @ vec.T


def sqrt_and_invsqrt(x):
    lam, vec = _eigh_pd(x)
    r = np.sqrt(lam)
    return (vec * r) @ vec.T, (vec / r) @ vec.T


class SPD(Manifold):
    name = "spd"

    def __init__(self, p: int, **tols):
        if p < 1:
            raise ContractViolation("SPD manifold needs p >= 1")
        super().__init__(**tols)
        self.p = p
        self.dim = p * (p + 1) // 2
        self.injectivity_radius = np.inf
        self.point_shape = (p, p)

    def check_point(self, x) -> None:
        if x.shape != (self.p, self.p) or not np.all(np.isfinite(x)):
            raise DomainError("point has the wrong shape or non-finite entries")
        if np.max(np.abs(x - x.T)) > self.tol_manifold * (1.0 + np.max(np.abs(x))):
            raise DomainError("point is not symmetric")
        _eigh_pd(x)

    def tangent_residual(self, x, w) -> float:
        return float(np.max(np.abs(w - w.T)))

    def _project(self, x, w):
        return sym(w)

    def gram(self, x, left, right):
        xinv = np.linalg.inv(x)
        a = (xinv @ left).reshape(left.shape[0], -1)
        b = np.swapaxes(xinv @ right, -1, -2).reshape(right.shape[0], -1)
        return a @ b.T

    def distance(self, x, y) -> float:
        _, isq = sqrt_and_invsqrt(x)
        lam, _ = _eigh_pd(isq @ y @ isq)
        return float(np.sqrt(np.sum(np.log(lam) ** 2)))

    def _exp(self, x, v):
        sq, isq = sqrt_and_invsqrt(x)
        return sym(sq @ expm_sym(isq @ v @ isq) @ sq)

    def _log(self, x, y):
        sq, isq = sqrt_and_invsqrt(x)
        return sym(sq @ logm_pd(isq @ y @ isq) @ sq)

    def transport_factor(self, x, y):
        """``E = (Y X^-1)^{1/2}`` so that transport is ``U -> E U E^T``."""
        sq, isq = sqrt_and_invsqrt(x)
        mid, _ = sqrt_and_invsqrt(isq @ y @ isq)
        return sq @ mid @ isq

    def _transport_stack(self, x, y, stack):
        e = self.transport_factor(x, y)
        return sym(e @ stack @ e.T)

    def basis_vectors(self, x):
        p = self.p
        sq, _ = sqrt_and_invsqrt(x)
        out = np.zeros((self.dim, p, p))
        k = 0
        for i in range(p):
            for j in range(i, p):
                if i == j:
                    out[k, i, i] = 1.0
                else:
                    out[k, i, j] = out[k, j, i] = np.sqrt(0.5)
                k += 1
        return sym(sq @ out @ sq)

    def egrad2rgrad(self, x, egrad):
        return sym(x @ sym(egrad) @ x)

    def ehess2rhess(self, x, egrad, ehess_u, u):
        return sym(x @ sym(ehess_u) @ x) + sym(u @ sym(egrad) @ x)

    def random_point(self, rng):
        a = rng.standard_normal((self.p, self.p))
        return sym(a @ a.T / self.p + 0.5 * np.eye(self.p))

    def normalize(self, x):
        return sym(x)
