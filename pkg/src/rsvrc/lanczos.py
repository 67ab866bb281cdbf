"""Lanczos estimate of the smallest eigenvalue of a self-adjoint tangent operator."""

from __future__ import annotations

import numpy as np

from .errors import SolverFailure


def lanczos_min_eig(apply_stack, manifold, x, rng, max_iter=None, tol=1e-6, max_restarts=5):
    """Smallest eigenpair of a self-adjoint map on ``T_x M``.

    ``apply_stack`` maps a stack of ambient tangent vectors to their images.
    Uses full reorthogonalisation in the Riemannian metric. On breakdown (an
    invariant subspace was found) the iteration restarts from a fresh random
    probe orthogonal to everything seen so far, so it reaches the full space
    after at most ``dim`` steps.

    Returns ``(eigenvalue, ambient eigenvector, iterations)``.
    """
    dim = manifold.dim
    max_iter = dim if max_iter is None else max_iter

    def ip(a, b):
        return float(manifold.gram(x, a[None], b[None])[0, 0])

    def fresh(basis):
        for _ in range(10):
            q = manifold.random_tangent(x, rng).ambient
            for _ in range(2):
                for v in basis:
                    q = q - ip(v, q) * v
            n = np.sqrt(max(ip(q, q), 0.0))
            if n > 1e-8:
                return q / n
        return None

    basis: list[np.ndarray] = []
    alphas: list[float] = []
    betas: list[float] = []  # betas[j] couples basis[j] and basis[j+1]
    restarts = 0
    q = fresh(basis)
    theta, y = np.inf, None
    for it in range(1, max_iter + 1):
        basis.append(q)
        w = manifold._project(x, apply_stack(q[None])[0])
        alpha = ip(q, w)
        alphas.append(alpha)
        for _ in range(2):
            for v in basis:
                w = w - ip(v, w) * v
        beta = np.sqrt(max(ip(w, w), 0.0))

        T = np.diag(alphas)
        if len(betas):
            off = np.array(betas)
            T += np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = np.linalg.eigh(T)
        theta, y = evals[0], evecs[:, 0]
        resid = beta * abs(y[-1])
        scale = max(1.0, abs(theta))
        if len(basis) >= dim or resid <= tol * scale:
            break
        if beta <= 1e-10 * max(1.0, float(np.max(np.abs(alphas)))):
            restarts += 1
            q = fresh(basis)
            if restarts > max_restarts or q is None:
                raise SolverFailure("Lanczos broke down repeatedly without converging")
            betas.append(0.0)
            continue
        betas.append(beta)
        q = w / beta
    vec = np.tensordot(y, np.array(basis), axes=1)
    return float(theta), vec, it
