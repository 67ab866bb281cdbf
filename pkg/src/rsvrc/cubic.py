"""Cubic-regularised Newton subproblem on a tangent space.

Model: ``m(h) = <v, h> + 1/2 <U h, h> + sigma/6 |h|^3``.

Both solvers work in an orthonormal tangent basis, where the subproblem is an
ordinary k-dimensional Euclidean cubic model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import ContractViolation, SolverFailure
from .lanczos import lanczos_min_eig
from .manifolds import TangentBasis, TangentVector
from .operators import HessianOperator, sym

MAX_SECULAR_ITER = 200
MAX_GD_ITER = 10_000
DENSE_LIMIT = 64


@dataclass
class CubicModel:
    v: TangentVector
    U: HessianOperator
    sigma: float

    @property
    def base(self):
        return self.v.base

    @property
    def manifold(self):
        return self.U.manifold


@dataclass
class CubicSolution:
    h: TangentVector
    coords: np.ndarray
    model_value: float
    grad_residual: float
    lambda_min_model_hess: float
    lambda_min_U: float
    mode: str
    delta: float = 0.0
    iterations: int = 0
    hard_case: bool = False

    @property
    def step_norm(self) -> float:
        return float(np.linalg.norm(self.coords))


def model_value(model: CubicModel, h: TangentVector) -> float:
    M = model.manifold
    nh = M.norm(model.base, h)
    return M.inner(model.base, model.v, h) + 0.5 * M.inner(model.base, model.U(h), h) + model.sigma / 6.0 * nh**3


def model_grad(model: CubicModel, h: TangentVector) -> TangentVector:
    nh = model.manifold.norm(model.base, h)
    return model.v + model.U(h) + (0.5 * model.sigma * nh) * h


def step_norm_bound(c_g: float, c_H: float, sigma: float) -> float:
    """Upper bound on the norm of the global minimiser given |v| <= c_g, |U| <= c_H."""
    return (c_H + np.sqrt(c_H * c_H + 2.0 * sigma * c_g)) / sigma


def model_hessian_coords(H, h, sigma):
    nh = float(np.linalg.norm(h))
    if nh == 0.0:
        return H.copy()
    return H + 0.5 * sigma * (nh * np.eye(len(h)) + np.outer(h, h) / nh)


def _coords_stats(g, H, h, sigma):
    nh = float(np.linalg.norm(h))
    Hh = H @ h
    value = float(g @ h + 0.5 * h @ Hh + sigma / 6.0 * nh**3)
    resid = float(np.linalg.norm(g + Hh + 0.5 * sigma * nh * h))
    lam_model = float(np.linalg.eigvalsh(model_hessian_coords(H, h, sigma))[0])
    return value, resid, lam_model


def _lexi_positive(q):
    nz = np.flatnonzero(np.abs(q) > 1e-12 * np.max(np.abs(q)))
    return -q if q[nz[0]] < 0 else q


def solve_cubic_coords(g, H, sigma):
    """Global minimiser of ``g.h + h.H.h/2 + sigma/6 |h|^3`` over R^k.

    Solves the secular equation ``|(H + sigma r/2 I)^-1 g| = r`` on
    ``r >= max(0, -2 lambda_1 / sigma)`` with safeguarded Newton steps,
    falling back to the eigenvector construction in the hard case.
    Returns ``(h, info)`` where info has ``iterations`` and ``hard_case``.
    """
    if sigma <= 0:
        raise ContractViolation("cubic penalty sigma must be positive")
    g = np.asarray(g, dtype=float)
    H = sym(np.asarray(H, dtype=float))
    lam, Q = np.linalg.eigh(H)
    gh = Q.T @ g
    gnorm = float(np.linalg.norm(g))
    scale = max(1.0, float(np.max(np.abs(lam))))
    lam1 = float(lam[0])
    r_low = max(0.0, -2.0 * lam1 / sigma)
    if gnorm == 0.0 and lam1 >= 0.0:
        return np.zeros_like(g), {"iterations": 0, "hard_case": False}

    if lam1 < 0.0:
        bottom = lam - lam1 <= 1e-12 * scale
        if np.linalg.norm(gh[bottom]) <= 1e-10 * (gnorm + sigma):
            rest = ~bottom
            h_rest = -gh[rest] / (lam[rest] + 0.5 * sigma * r_low)
            nr = float(np.linalg.norm(h_rest))
            if nr <= r_low:
                alpha = np.sqrt(r_low * r_low - nr * nr)
                q1 = _lexi_positive(Q[:, np.flatnonzero(bottom)[0]])
                h = Q[:, rest] @ h_rest + alpha * q1
                return h, {"iterations": 0, "hard_case": True}

    def phi(r):
        d = lam + 0.5 * sigma * r
        return float(np.sqrt(np.sum((gh / d) ** 2))), d

    def psi_and_slope(r):
        p, d = phi(r)
        dphi = -0.5 * sigma * float(np.sum(gh * gh / d**3)) / p
        return 1.0 / p - 1.0 / r, -dphi / (p * p) + 1.0 / (r * r), p

    lo = r_low
    hi = max(step_norm_bound(gnorm, float(np.max(np.abs(lam))), sigma), lo * (1.0 + 1e-12) + 1e-300)
    while psi_and_slope(hi)[0] < 0.0:
        hi *= 2.0
    r = hi
    for it in range(1, MAX_SECULAR_ITER + 1):
        psi, slope, p = psi_and_slope(r)
        if abs(p - r) <= 1e-12 * (1.0 + r):
            break
        if psi < 0.0:
            lo = r
        else:
            hi = r
        if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, hi):
            break
        r_new = r - psi / slope if slope > 0.0 else -1.0
        if not (lo < r_new < hi):
            r_new = 0.5 * (lo + hi)
        r = r_new
    else:
        raise SolverFailure(f"secular equation did not converge in {MAX_SECULAR_ITER} iterations")
    d = lam + 0.5 * sigma * r
    return _refine(g, H, sigma, Q @ (-gh / d)), {"iterations": it, "hard_case": False}


def _refine(g, H, sigma, h, steps=3):
    # Newton polish of g + H h + sigma/2 |h| h = 0; near the hard case the
    # eigen-coordinate formula loses digits to cancellation in lam_1 + sigma r/2
    def resid(h):
        return g + H @ h + 0.5 * sigma * np.linalg.norm(h) * h

    res = resid(h)
    for _ in range(steps):
        if not np.linalg.norm(res) > 0.0:
            break
        try:
            cand = h - np.linalg.solve(model_hessian_coords(H, h, sigma), res)
        except np.linalg.LinAlgError:
            break
        res_c = resid(cand)
        if not np.linalg.norm(res_c) < np.linalg.norm(res):
            break
        h, res = cand, res_c
    return h


def _coordinates(model: CubicModel, basis: TangentBasis | None):
    if model.sigma <= 0:
        raise ContractViolation("cubic penalty sigma must be positive")
    if basis is None:
        basis = model.manifold.tangent_basis(model.base)
    return basis, basis.coords(model.v), model.U.matrix(basis)


def solve_exact(model: CubicModel, basis: TangentBasis | None = None) -> CubicSolution:
    basis, g, H = _coordinates(model, basis)
    return solve_exact_coords(g, H, model.sigma, basis)


def solve_exact_coords(g, H, sigma, basis: TangentBasis) -> CubicSolution:
    h, info = solve_cubic_coords(g, H, sigma)
    value, resid, lam_model = _coords_stats(g, H, h, sigma)
    return CubicSolution(
        h=basis.combine(h),
        coords=h,
        model_value=value,
        grad_residual=resid,
        lambda_min_model_hess=lam_model,
        lambda_min_U=float(np.linalg.eigvalsh(H)[0]),
        mode="exact",
        iterations=info["iterations"],
        hard_case=info["hard_case"],
    )


def inexact_tolerances(sigma, delta):
    """``(gradient tolerance, curvature floor)`` of a delta-inexact solution."""
    return sigma ** (1.0 / 3.0) * delta ** (2.0 / 3.0), -(sigma ** (2.0 / 3.0)) * delta ** (1.0 / 3.0)


def solve_inexact(model: CubicModel, delta: float, basis: TangentBasis | None = None,
                  max_iter: int = MAX_GD_ITER) -> CubicSolution:
    basis, g, H = _coordinates(model, basis)
    return solve_inexact_coords(g, H, model.sigma, delta, basis, max_iter)


def solve_inexact_coords(g, H, sigma, delta, basis: TangentBasis, max_iter: int = MAX_GD_ITER,
                         rng=None) -> CubicSolution:
    """Gradient descent from ``h = 0`` until the three delta-inexact conditions hold.

    Model-value decrease and gradient size are checked every iteration (inside
    the kernel); curvature is checked when both pass. A failed curvature check
    moves the iterate along the offending eigenvector and resumes descent.
    """
    if delta <= 0:
        raise ContractViolation("inexactness delta must be positive")
    g = np.asarray(g, dtype=float)
    H = sym(np.asarray(H, dtype=float))
    k = len(g)
    tol_grad, curv_floor = inexact_tolerances(sigma, delta)
    c_H = float(np.linalg.norm(H, 2))
    radius = step_norm_bound(float(np.linalg.norm(g)), c_H, sigma)
    step = 1.0 / (c_H + sigma * radius)
    h = np.zeros(k)
    used = 0
    escapes = 0
    while True:
        h, it, ok = K.cubic_gd(g, H, sigma, step, tol_grad, delta, max_iter - used, h)
        used += it
        if not ok:
            raise SolverFailure(f"inexact cubic solver hit the {max_iter}-iteration cap")
        Hm = model_hessian_coords(H, h, sigma)
        if k <= DENSE_LIMIT:
            evals, evecs = np.linalg.eigh(Hm)
            lam_min, q = float(evals[0]), evecs[:, 0]
        else:
            from .manifolds import Euclidean

            E = Euclidean(k)
            rng = np.random.default_rng(0) if rng is None else rng
            lam_min, q, _ = lanczos_min_eig(lambda s: s @ Hm, E, np.zeros(k), rng, 3 * k, 1e-8)
        if lam_min >= curv_floor:
            break
        escapes += 1
        if escapes > 50:
            raise SolverFailure("inexact cubic solver kept landing on saddle points")
        grad = g + H @ h + 0.5 * sigma * np.linalg.norm(h) * h
        direction = -q if float(grad @ q) > 0 else q
        h = h + (2.0 * abs(lam_min) / sigma) * direction
    value, resid, lam_model = _coords_stats(g, H, h, sigma)
    return CubicSolution(
        h=basis.combine(h),
        coords=h,
        model_value=value,
        grad_residual=resid,
        lambda_min_model_hess=lam_model,
        lambda_min_U=float(np.linalg.eigvalsh(H)[0]),
        mode="inexact",
        delta=delta,
        iterations=used,
    )


class _ModelHessian(HessianOperator):
    def __init__(self, model: CubicModel, h: TangentVector):
        super().__init__(model.manifold, model.base)
        self.model = model
        self.h = h.ambient
        self.nh = model.manifold.norm(model.base, h)

    def apply_stack(self, stack):
        out = self.model.U.apply_stack(stack)
        if self.nh == 0.0:
            return out
        s = self.model.sigma
        dots = self.manifold.gram(self.base, stack, self.h[None])[:, 0]
        return out + 0.5 * s * (self.nh * stack + np.multiply.outer(dots, self.h) / self.nh)


def verify_inexact(model: CubicModel, h: TangentVector, delta: float, rng=None) -> tuple[bool, bool, bool]:
    """Check the three delta-inexact conditions independently.

    The curvature condition uses Lanczos (``3 k`` iterations, tolerance 1e-8)
    on the model Hessian ``U + sigma/2 (|h| I + h h^T / |h|)``.
    """
    M = model.manifold
    tol_grad, curv_floor = inexact_tolerances(model.sigma, delta)
    nh = M.norm(model.base, h)
    c1 = model_value(model, h) <= -model.sigma / 12.0 * nh**3 + delta
    c2 = M.norm(model.base, model_grad(model, h)) <= tol_grad
    rng = np.random.default_rng(0) if rng is None else rng
    lam, _, _ = lanczos_min_eig(_ModelHessian(model, h).apply_stack, M, model.base, rng, 3 * M.dim, 1e-8)
    c3 = lam >= curv_floor
    return bool(c1), bool(c2), bool(c3)
