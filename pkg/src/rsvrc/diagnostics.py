"""Independent checks: finite differences along geodesics, dense Hessians in a
tangent basis, and stationarity certificates.

Nothing here touches the oracle counter or the optimizer's random streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngs
from .errors import ContractViolation
from .lanczos import lanczos_min_eig
from .manifolds import TangentBasis
from .objectives import FiniteSumObjective


def _probe_rng(rng):
    return rngs.stream(0, 0, rngs.PROBE) if rng is None else rng


def _check_step(h_step):
    if not 1e-7 <= h_step <= 1e-3:
        raise ContractViolation("finite-difference step must lie in [1e-7, 1e-3]")


def fd_gradient_check(objective: FiniteSumObjective, x, n_probes: int = 10, h_step: float = 1e-5,
                      rng=None, grad=None) -> float:
    """Max over random unit probes of the relative central-difference error of
    ``<grad F, v>``. ``grad`` overrides the objective's own gradient."""
    _check_step(h_step)
    M, rng = objective.manifold, _probe_rng(rng)
    g = objective.riem_grad_full(x, charge=False) if grad is None else grad
    worst = 0.0
    for _ in range(n_probes):
        v = M.random_tangent(x, rng)
        fp = objective.value(M.exp(x, v * h_step))
        fm = objective.value(M.exp(x, v * -h_step))
        d = M.inner(x, g, v)
        worst = max(worst, abs(d - (fp - fm) / (2.0 * h_step)) / (1.0 + abs(d)))
    return worst


def fd_hessian_check(objective: FiniteSumObjective, x, n_probes: int = 10, h_step: float = 1e-4,
                     rng=None, hess=None) -> float:
    """Max relative error of ``<Hess F[v], v>`` against the second central
    difference along the geodesic through ``x`` in direction ``v``."""
    _check_step(h_step)
    M, rng = objective.manifold, _probe_rng(rng)
    H = objective.riemannian_hessian(x, None, charge=False) if hess is None else hess
    f0 = objective.value(x)
    worst = 0.0
    for _ in range(n_probes):
        v = M.random_tangent(x, rng)
        fp = objective.value(M.exp(x, v * h_step))
        fm = objective.value(M.exp(x, v * -h_step))
        q = M.inner(x, H.apply(v), v)
        worst = max(worst, abs(q - (fp - 2.0 * f0 + fm) / h_step**2) / (1.0 + abs(q)))
    return worst


@dataclass
class DenseHessian:
    matrix: np.ndarray
    asymmetry: float
    eigenvalues: np.ndarray


def dense_hessian(objective: FiniteSumObjective, x, basis: TangentBasis | None = None) -> DenseHessian:
    """``M[i, j] = <Hess F[b_j], b_i>`` in an orthonormal basis, symmetrised."""
    M = objective.manifold
    basis = M.tangent_basis(x) if basis is None else basis
    if basis.size > 256:
        raise ContractViolation("dense Hessian limited to 256 basis vectors")
    H = objective.riemannian_hessian(x, None, charge=False)
    raw = H.matrix(basis, symmetrize=False)
    asym = float(np.max(np.abs(raw - raw.T))) if raw.size else 0.0
    m = 0.5 * (raw + raw.T)
    return DenseHessian(m, asym, np.linalg.eigvalsh(m))


def lanczos_lambda_min(objective: FiniteSumObjective, x, rng=None, tol: float = 1e-6) -> float:
    M = objective.manifold
    H = objective.riemannian_hessian(x, None, charge=False)
    lam, _, _ = lanczos_min_eig(H.apply_stack, M, x, _probe_rng(rng), 3 * M.dim, tol)
    return lam


@dataclass
class StationarityReport:
    grad_norm: float
    lambda_min: float
    epsilon_equivalent: float
    epsilon: float
    L_H_estimate: float
    passed: bool


def certify_values(grad_norm: float, lambda_min: float, epsilon: float, L_H_estimate: float) -> StationarityReport:
    """Stationarity verdict from precomputed numbers. Comparisons are inclusive."""
    if not epsilon > 0 or not L_H_estimate > 0:
        raise ContractViolation("epsilon and L_H_estimate must be positive")
    # smallest eps with grad_norm <= eps and lambda_min >= -sqrt(L_H eps)
    eps_eq = max(grad_norm, (lambda_min * lambda_min / L_H_estimate) if lambda_min < 0 else 0.0)
    passed = grad_norm <= epsilon and lambda_min >= -math.sqrt(L_H_estimate * epsilon)
    return StationarityReport(grad_norm, lambda_min, eps_eq, epsilon, L_H_estimate, bool(passed))


def certify(objective: FiniteSumObjective, x, epsilon: float, L_H_estimate: float, rng=None) -> StationarityReport:
    M = objective.manifold
    g = objective.riem_grad_full(x, charge=False)
    if M.dim <= 64:
        lam = float(dense_hessian(objective, x).eigenvalues[0])
    else:
        lam = lanczos_lambda_min(objective, x, rng)
    return certify_values(M.norm(x, g), lam, epsilon, L_H_estimate)
