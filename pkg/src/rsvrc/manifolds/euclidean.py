"""Flat space R^k. Used as the coordinate space of the cubic subproblem."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .base import Manifold


class Euclidean(Manifold):
    name = "euclidean"

    def __init__(self, k: int, **tols):
        super().__init__(**tols)
        self.k = k
        self.dim = k
        self.injectivity_radius = np.inf
        self.point_shape = (k,)

    def check_point(self, x) -> None:
        if x.shape != (self.k,) or not np.all(np.isfinite(x)):
            raise DomainError("point has the wrong shape or non-finite entries")

    def tangent_residual(self, x, w) -> float:
        return 0.0

    def _project(self, x, w):
        return np.array(w, dtype=float)

    def gram(self, x, left, right):
        return left @ right.T

    def distance(self, x, y) -> float:
        return float(np.linalg.norm(y - x))

    def _exp(self, x, v):
        return x + v

    def _log(self, x, y):
        return y - x

    def _transport_stack(self, x, y, stack):
        return stack.copy()

    def basis_vectors(self, x):
        return np.eye(self.k)

    def egrad2rgrad(self, x, egrad):
        return egrad

    def ehess2rhess(self, x, egrad, ehess_u, u):
        return ehess_u

    def random_point(self, rng):
        return rng.standard_normal(self.k)

    def normalize(self, x):
        return x
