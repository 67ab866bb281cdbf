"""Finite-sum objectives ``F(x) = (1/N) sum_i f_i(x)`` and their oracles.

One second-order oracle (SO) call is the triple ``(f_i(x), grad f_i(x),
hess f_i(x))`` at a single ``(i, x)``. Batch evaluations return all three
at once and are charged exactly once per component, however many times the
resulting Hessian operator is applied afterwards.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as K
from .errors import ContractViolation, DomainError
from .manifolds import SPD, Manifold, Sphere, TangentVector
from .manifolds.spd import _eigh_pd, sym
from .operators import RiemannianHessian


class SoCounter:
    """Monotone count of second-order oracle calls."""

    def __init__(self):
        self.calls = 0

    def charge(self, n: int) -> None:
        if n < 0:
            raise ContractViolation("oracle charge must be nonnegative")
        self.calls += int(n)

    def __repr__(self):
        return f"SoCounter(calls={self.calls})"


@dataclass
class EuclidBatch:
    """Mean value, Euclidean gradient and Hessian applier over a batch."""

    value: float
    egrad: np.ndarray
    ehess_stack: Callable[[np.ndarray], np.ndarray]
    size: int

    def ehess(self, u: np.ndarray) -> np.ndarray:
        return self.ehess_stack(u[None])[0]


class FiniteSumObjective(abc.ABC):
    manifold: Manifold
    n_components: int

    def __init__(self):
        self.counter = SoCounter()

    @property
    def ambient_shape(self):
        return self.manifold.point_shape

    @abc.abstractmethod
    def _batch(self, x, idx) -> EuclidBatch:
        """Evaluate the components in ``idx`` (``None`` means all of them)."""

    def _check_idx(self, idx):
        if idx is None:
            return None
        idx = np.asarray(idx, dtype=np.int64).ravel()
        if idx.size == 0:
            raise ContractViolation("batch must be nonempty")
        if idx.min() < 0 or idx.max() >= self.n_components:
            raise ContractViolation(f"component index out of range [0, {self.n_components})")
        return idx

    def euclid_batch(self, x, idx=None, charge: bool = True) -> EuclidBatch:
        idx = self._check_idx(idx)
        out = self._batch(x, idx)
        if charge:
            self.counter.charge(out.size)
        return out

    def euclid_oracle(self, i: int, x):
        """One SO call: ``(f_i(x), grad f_i(x), u -> hess f_i(x)[u])``, Euclidean."""
        b = self.euclid_batch(x, [i])
        return b.value, b.egrad, b.ehess

    def value(self, x, charge: bool = False) -> float:
        return self.euclid_batch(x, None, charge).value

    def riemannian_hessian(self, x, idx=None, charge: bool = True) -> RiemannianHessian:
        return RiemannianHessian(self.manifold, x, self.euclid_batch(x, idx, charge))

    def riem_grad_full(self, x, charge: bool = True) -> TangentVector:
        return self.riemannian_hessian(x, None, charge).gradient()

    def riem_hess_vec_full(self, x, u: TangentVector, charge: bool = True) -> TangentVector:
        return self.riemannian_hessian(x, None, charge).apply(u)

    def riem_grad_batch(self, x, batch, charge: bool = True) -> TangentVector:
        if batch is None:
            raise ContractViolation("batch must be nonempty")
        return self.riemannian_hessian(x, batch, charge).gradient()

    def riem_hess_vec_batch(self, x, u: TangentVector, batch, charge: bool = True) -> TangentVector:
        if batch is None:
            raise ContractViolation("batch must be nonempty")
        return self.riemannian_hessian(x, batch, charge).apply(u)


class StudentT(FiniteSumObjective):
    """Negative log-likelihood of a zero-mean multivariate t in its inverse scale.

    ``f_i(X) = (nu+p)/2 * log(1 + a_i^T X a_i / nu) - 1/2 * log det X`` on SPD(p).
    """

    def __init__(self, samples, nu: float):
        super().__init__()
        self.samples = np.ascontiguousarray(samples, dtype=float)
        if self.samples.ndim != 2:
            raise ContractViolation("samples must be an N x p matrix")
        if nu <= 0:
            raise ContractViolation("degrees of freedom must be positive")
        self.n_components, self.p = self.samples.shape
        self.nu = float(nu)
        self.manifold = SPD(self.p)
        self._c = 0.5 * (self.nu + self.p)

    def _batch(self, X, idx):
        lam, vec = _eigh_pd(X)
        xinv = (vec / lam) @ vec.T
        logdet = float(np.sum(np.log(lam)))
        A, nu, c = self.samples, self.nu, self._c
        s = K.quad_forms(A, idx, sym(X))
        if np.any(s <= -nu):
            raise DomainError("quadratic form left the domain of the log")
        b = s.shape[0]
        value = c * float(np.mean(np.log1p(s / nu))) - 0.5 * logdet
        w = 1.0 / (nu + s)
        egrad = (c / b) * K.weighted_gram(A, idx, w) - 0.5 * xinv
        w2 = (-c / b) * w * w

        def ehess_stack(U):
            U = sym(U)
            q = K.quad_forms_multi(A, idx, U)
            return K.weighted_gram_multi(A, idx, w2[:, None] * q) + 0.5 * (xinv @ U @ xinv)

        return EuclidBatch(value, egrad, ehess_stack, b)


class SphereClassifier(FiniteSumObjective):
    """Smooth nonconvex linear-classifier loss on the unit sphere.

    ``f_i(x) = (1 - s(b_i x^T a_i))^2`` with ``s`` the logistic sigmoid.
    """

    def __init__(self, features, labels):
        super().__init__()
        self.features = np.ascontiguousarray(features, dtype=float)
        self.labels = np.ascontiguousarray(labels, dtype=float).ravel()
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ContractViolation("features must be N x d with N labels")
        if not np.all(np.abs(self.labels) == 1.0):
            raise ContractViolation("labels must be +1 or -1")
        self.n_components, self.d = self.features.shape
        self.manifold = Sphere(self.d)

    def _batch(self, x, idx):
        A = self.features
        z = K.margins(A, idx, x, self.labels)
        loss, d1, d2 = K.logistic_terms(z)
        b = z.shape[0]
        lab = self.labels if idx is None else self.labels[idx]
        egrad = K.weighted_rowsum(A, idx, d1 * lab) / b
        ehess = K.weighted_gram(A, idx, d2 / b)

        def ehess_stack(U):
            return U @ ehess

        return EuclidBatch(float(np.mean(loss)), egrad, ehess_stack, b)


class Quadratic(FiniteSumObjective):
    """``f_i(x) = 1/2 x^T Q_i x + c_i^T x`` on a vector manifold; a test fixture."""

    def __init__(self, manifold: Manifold, Q, c=None):
        super().__init__()
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 2:
            Q = Q[None]
        self.Q = 0.5 * (Q + Q.transpose(0, 2, 1))
        n, d, _ = self.Q.shape
        self.c = np.zeros((n, d)) if c is None else np.asarray(c, dtype=float).reshape(n, d)
        self.n_components = n
        self.manifold = manifold

    def _batch(self, x, idx):
        Q = self.Q if idx is None else self.Q[idx]
        c = self.c if idx is None else self.c[idx]
        Qm, cm = Q.mean(axis=0), c.mean(axis=0)
        value = 0.5 * float(x @ Qm @ x) + float(cm @ x)
        return EuclidBatch(value, Qm @ x + cm, lambda U: U @ Qm, Q.shape[0])
