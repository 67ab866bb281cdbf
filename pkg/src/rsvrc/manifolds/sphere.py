"""Unit sphere S^{d-1} embedded in R^d with the induced metric."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation, DomainError
from .base import Manifold

# log/transport are undefined this close to the cut locus
ANTIPODAL_GAP = 1e-8


class Sphere(Manifold):
    name = "sphere"

    def __init__(self, d: int, **tols):
        if d < 2:
            raise ContractViolation("sphere needs ambient dimension d >= 2")
        super().__init__(**tols)
        self.d = d
        self.dim = d - 1
        self.injectivity_radius = np.pi
        self.point_shape = (d,)

    def check_point(self, x) -> None:
        if x.shape != (self.d,) or not np.all(np.isfinite(x)):
            raise DomainError("point has the wrong shape or non-finite entries")
        if abs(float(x @ x) - 1.0) > self.tol_manifold:
            raise DomainError(f"|x|^2 - 1 = {float(x @ x) - 1.0:.3e}")

    def tangent_residual(self, x, w) -> float:
        return abs(float(x @ w))

    def _project(self, x, w):
        # also handles stacks (k, d)
        return w - np.multiply.outer(w @ x, x)

    def gram(self, x, left, right):
        return left @ right.T

    def _angle(self, x, y) -> tuple[float, np.ndarray, float]:
        c = float(np.clip(x @ y, -1.0, 1.0))
        w = y - c * x
        nw = float(np.linalg.norm(w))
        return float(np.arctan2(nw, c)), w, nw

    def distance(self, x, y) -> float:
        return self._angle(x, y)[0]

    def _exp(self, x, v):
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return x.copy()
        y = np.cos(nv) * x + (np.sin(nv) / nv) * v
        return y / np.linalg.norm(y)

    def _log(self, x, y):
        theta, w, nw = self._angle(x, y)
        if np.pi - theta <= ANTIPODAL_GAP:
            raise DomainError("log is undefined for antipodal points")
        if nw == 0.0:
            return np.zeros_like(x)
        return self._project(x, (theta / nw) * w)

    def _transport_stack(self, x, y, stack):
        theta, w, nw = self._angle(x, y)
        if np.pi - theta <= ANTIPODAL_GAP:
            raise DomainError("transport is undefined between antipodal points")
        if nw == 0.0:
            return stack.copy()
        e = w / nw  # unit direction of the geodesic at x
        # rotation in span{x, e}: x -> y, e -> cos(t) e - sin(t) x
        moved_e = np.cos(theta) * e - np.sin(theta) * x
        coef = stack @ e
        out = stack + np.multiply.outer(coef, moved_e - e)
        return self._project(y, out)

    def basis_vectors(self, x):
        q, _ = np.linalg.qr(np.column_stack([x, np.eye(self.d)]))
        return self._project(x, q[:, 1:self.d].T.copy())

    def egrad2rgrad(self, x, egrad):
        return self._project(x, egrad)

    def ehess2rhess(self, x, egrad, ehess_u, u):
        return self._project(x, ehess_u) - float(x @ egrad) * u

    def random_point(self, rng):
        z = rng.standard_normal(self.d)
        return z / np.linalg.norm(z)

    def normalize(self, x):
        return x / np.linalg.norm(x)
