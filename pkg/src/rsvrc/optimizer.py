"""Stochastic variance-reduced cubic-regularised Newton on a manifold, and the
full-batch cubic-regularised baseline.

Oracle accounting: an epoch anchor costs ``N`` calls; each inner iteration
costs ``b_g + b_h``. The anchor-side batch terms of the estimators reuse the
component evaluations already paid for by the full pass and are not charged
again. Metric snapshots (value, gradient norm, curvature) are diagnostics and
never charged.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from . import rng as rngs
from .cubic import CubicModel, solve_exact_coords, solve_inexact_coords, step_norm_bound
from .errors import ContractViolation, DomainError, SolverFailure
from .lanczos import lanczos_min_eig
from .manifolds import Manifold, TangentBasis, TangentVector
from .objectives import FiniteSumObjective
from .operators import HessianOperator, RiemannianHessian, sym

DENSE_LIMIT = 64


@dataclass
class SolverConfig:
    sigma: float
    S: int
    T: int
    b_g: int
    b_h: int
    delta: float = 0.0
    seed: int = 0
    with_replacement: bool = True
    record_every: int = 1
    L_H_estimate: float | None = None
    max_inner_iter: int = 10_000

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractViolation("sigma must be positive")
        if self.S < 1 or self.T < 1:
            raise ContractViolation("S and T must be at least 1")
        if self.b_g < 1 or self.b_h < 1:
            raise ContractViolation("batch sizes must be at least 1")
        if self.delta < 0:
            raise ContractViolation("delta must be nonnegative")
        if self.record_every < 1:
            raise ContractViolation("record_every must be at least 1")
        if self.L_H_estimate is not None and not self.L_H_estimate > 0:
            raise ContractViolation("L_H_estimate must be positive")

    @property
    def lipschitz(self) -> float:
        return self.sigma / 2.0 if self.L_H_estimate is None else self.L_H_estimate

    def validate_for(self, n_components: int) -> None:
        if self.b_g > n_components or self.b_h > n_components:
            raise ContractViolation(f"batch sizes must not exceed N={n_components}")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


RECORD_COLUMNS = ("s", "t", "so_calls", "seconds", "f", "grad_norm", "lambda_min", "mu")


@dataclass
class RunRecord:
    s: int
    t: int
    so_calls: int
    seconds: float
    f: float
    grad_norm: float
    lambda_min: float
    mu: float

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in RECORD_COLUMNS)


@dataclass
class EpochAnchor:
    """Full gradient and Hessian at the epoch anchor, plus a cached basis matrix."""

    objective: FiniteSumObjective
    x_hat: np.ndarray
    g_full: TangentVector
    H_full: RiemannianHessian
    basis: TangentBasis
    H_matrix: np.ndarray

    @classmethod
    def build(cls, objective: FiniteSumObjective, x_hat) -> "EpochAnchor":
        M = objective.manifold
        H = objective.riemannian_hessian(x_hat, None, charge=True)
        basis = M.tangent_basis(x_hat)
        return cls(objective, x_hat, H.gradient(), H, basis, H.matrix(basis))

    @property
    def manifold(self) -> Manifold:
        return self.objective.manifold


def _log_from_anchor(anchor: EpochAnchor, x_t) -> TangentVector:
    M = anchor.manifold
    try:
        M._require_inside_injectivity(anchor.x_hat, x_t)
    except DomainError as exc:
        raise DomainError(
            f"iterate left the injectivity ball around the epoch anchor ({exc}); "
            "sigma is too small for this epoch length"
        ) from exc
    return M.log(anchor.x_hat, x_t)


class VarianceReducedHessian(HessianOperator):
    """``G o H o G^-1 + H_b(x_t) - G o H_b(x_hat) o G^-1`` with ``G`` the transport
    from the anchor to ``x_t``."""

    def __init__(self, anchor: EpochAnchor, x_t, now: RiemannianHessian, at_anchor: RiemannianHessian):
        super().__init__(anchor.manifold, x_t)
        self.anchor = anchor
        self.now = now
        self.at_anchor = at_anchor

    def apply_stack(self, stack):
        M, xh = self.manifold, self.anchor.x_hat
        back = M.transport_stack(self.base, xh, stack)
        w = self.anchor.H_full.apply_stack(back) - self.at_anchor.apply_stack(back)
        return M.transport_stack(xh, self.base, w) + self.now.apply_stack(stack)

    def transported_basis(self) -> TangentBasis:
        return self.manifold.transport_basis(self.anchor.basis, self.base)

    def model_matrix(self, basis: TangentBasis | None = None) -> tuple[TangentBasis, np.ndarray]:
        """Coordinate matrix in the transported anchor basis.

        Transport is an isometry, so the anchor terms have the same matrix in
        the transported basis as in the anchor basis and need no re-evaluation.
        """
        if basis is None:
            basis = self.transported_basis()
        m = self.anchor.H_matrix - self.at_anchor.matrix(self.anchor.basis) + self.now.matrix(basis)
        return basis, sym(m)


def _riem_batch(objective, x, idx, charge):
    return objective.riemannian_hessian(x, idx, charge)


def vr_gradient(anchor: EpochAnchor, x_t, eta: TangentVector, batch_g, *, now=None, at_anchor=None) -> TangentVector:
    """Variance-reduced gradient estimate at ``x_t``.

    ``eta`` must be ``log(x_hat, x_t)``. Charges ``b_g`` oracle calls unless
    precomputed batch Hessians ``now`` / ``at_anchor`` are passed in.
    """
    M, obj, xh = anchor.manifold, anchor.objective, anchor.x_hat
    if batch_g is None:
        raise ContractViolation("batch must be nonempty")
    if now is None:
        now = _riem_batch(obj, x_t, batch_g, True)
    if at_anchor is None:
        at_anchor = _riem_batch(obj, xh, batch_g, False)
    corr = anchor.g_full - at_anchor.gradient() - (at_anchor.apply(eta) - anchor.H_full.apply(eta))
    moved = M.transport(xh, x_t, corr)
    return TangentVector(x_t, moved.ambient + now.gradient().ambient)


def vr_hessian_operator(anchor: EpochAnchor, x_t, batch_h, *, now=None, at_anchor=None) -> VarianceReducedHessian:
    """Variance-reduced Hessian operator at ``x_t``; charges ``b_h`` calls once."""
    obj, xh = anchor.objective, anchor.x_hat
    if batch_h is None:
        raise ContractViolation("batch must be nonempty")
    if now is None:
        now = _riem_batch(obj, x_t, batch_h, True)
    if at_anchor is None:
        at_anchor = _riem_batch(obj, xh, batch_h, False)
    return VarianceReducedHessian(anchor, x_t, now, at_anchor)


# ---------------------------------------------------------------- diagnostics


def lambda_min_hess(objective: FiniteSumObjective, x, rng=None, tol: float = 1e-6, dense: bool | None = None) -> float:
    """Smallest eigenvalue of the Riemannian Hessian of the full objective.

    Dense tangent-basis eigenvalues when ``dim <= 64`` (or ``dense=True``),
    otherwise Lanczos on Hessian-vector products. Uncharged.
    """
    M = objective.manifold
    H = objective.riemannian_hessian(x, None, charge=False)
    if dense is None:
        dense = M.dim <= DENSE_LIMIT
    if dense:
        return float(np.linalg.eigvalsh(H.matrix(M.tangent_basis(x)))[0])
    rng = rngs.stream(0, 0, rngs.PROBE) if rng is None else rng
    lam, _, _ = lanczos_min_eig(H.apply_stack, M, x, rng, 3 * M.dim, tol)
    return lam


def mu_from(grad_norm: float, lam_min: float, L_H_estimate: float) -> float:
    if not L_H_estimate > 0:
        raise ContractViolation("L_H_estimate must be positive")
    curv = -(lam_min**3) / L_H_estimate**1.5 if lam_min < 0 else 0.0
    return max(grad_norm**1.5, curv)


def mu(objective: FiniteSumObjective, x, L_H_estimate: float) -> float:
    """Second-order stationarity measure ``max(|grad|^1.5, -lambda_min^3 / L_H^1.5)``."""
    M = objective.manifold
    g = objective.riem_grad_full(x, charge=False)
    return mu_from(M.norm(x, g), lambda_min_hess(objective, x), L_H_estimate)


def snapshot(objective: FiniteSumObjective, x, L_H: float) -> tuple[float, float, float, float]:
    """``(F, |grad F|, lambda_min, mu)`` at ``x`` from one uncharged full pass."""
    M = objective.manifold
    H = objective.riemannian_hessian(x, None, charge=False)
    gnorm = M.norm(x, H.gradient())
    if M.dim <= DENSE_LIMIT:
        lam = float(np.linalg.eigvalsh(H.matrix(M.tangent_basis(x)))[0])
    else:
        lam, _, _ = lanczos_min_eig(H.apply_stack, M, x, rngs.stream(0, 0, rngs.PROBE), 3 * M.dim, 1e-6)
    return H.batch.value, gnorm, lam, mu_from(gnorm, lam, L_H)


@dataclass
class SigmaReport:
    applicable: bool
    threshold: float
    sigma: float
    passed: bool
    message: str


def sigma_lower_bound_check(config: SolverConfig, manifold: Manifold, c_g: float, c_H: float) -> SigmaReport:
    """Advisory check that sigma keeps each epoch inside the injectivity ball.

    With ``r = inj(M)`` the exact-step requirement is
    ``sigma > 2 (c_g T^2 + r c_H T) / r^2``; for ``delta > 0`` the inexact-step
    requirement ``sigma > [(T^2 d + sqrt(T^4 d^2 + 2 r^2 (r T c_H + c_g T^2))) / r^2]^2``
    with ``d = delta^(2/3)`` is used instead.
    """
    r = manifold.injectivity_radius
    s = config.sigma
    if not np.isfinite(r):
        return SigmaReport(False, 0.0, s, True, "not applicable: infinite injectivity radius")
    T = config.T
    if config.delta > 0:
        d = config.delta ** (2.0 / 3.0)
        thr = ((T * T * d + math.sqrt(T**4 * d * d + 2 * r * r * (r * T * c_H + c_g * T * T))) / (r * r)) ** 2
    else:
        thr = 2.0 * (c_g * T * T + r * c_H * T) / (r * r)
    ok = s > thr
    msg = f"sigma={s:.6g} {'>' if ok else '<='} threshold {thr:.6g}"
    return SigmaReport(True, thr, s, ok, msg)


def advisory_batch_sizes(k_bar: float, T: int, dim: int, zeta: float = 1.0) -> tuple[float, float]:
    """Batch sizes sufficient for the expected-stationarity guarantee.

    ``dim`` is the ambient dimension ``m n``; ``zeta >= 1`` is the curvature
    constant (1 on nonnegatively curved manifolds). Advisory only.
    """
    if k_bar < 2 or T < 1 or zeta < 1:
        raise ContractViolation("need k_bar >= 2, T >= 1, zeta >= 1")
    a = math.sqrt(zeta - 1.0) + 1.0
    b_g = 3000.0 ** (4.0 / 3.0) * T**4 * a**4 / k_bar**2
    den = (math.sqrt(k_bar / (193.0 * T * a) + 0.125) - 1.0 / (2.0 * math.sqrt(2.0))) ** 2
    b_h = math.e * math.log(dim) / den
    return b_g, b_h


# ------------------------------------------------------------------- drivers


@dataclass
class StepInfo:
    """What the callback sees after each accepted step."""

    s: int
    t: int
    x: np.ndarray
    x_next: np.ndarray
    v: TangentVector
    U: HessianOperator
    U_matrix: np.ndarray
    basis: TangentBasis
    h: TangentVector
    step_norm: float
    step_bound: float
    model_value: float


@dataclass
class RunResult:
    x_out: np.ndarray
    x_last: np.ndarray
    records: list[RunRecord] = field(default_factory=list)
    out_index: tuple[int, int] = (0, 0)


def _subsolve(config: SolverConfig, g, H, basis):
    if config.delta == 0:
        return solve_exact_coords(g, H, config.sigma, basis)
    return solve_inexact_coords(g, H, config.sigma, config.delta, basis, config.max_inner_iter)


def _sample(rng, n, b, with_replacement):
    if with_replacement:
        return rng.integers(0, n, size=b)
    return rng.choice(n, size=b, replace=False)


class _Recorder:
    def __init__(self, objective, L_H, clock):
        self.objective = objective
        self.L_H = L_H
        self.clock = clock
        self.elapsed = 0.0
        self.records: list[RunRecord] = []
        self._t0 = None

    def start(self):
        self._t0 = self.clock()

    def pause(self):
        self.elapsed += self.clock() - self._t0

    def add(self, s, t, x):
        f, gn, lam, m = snapshot(self.objective, x, self.L_H)
        self.records.append(RunRecord(s, t, self.objective.counter.calls, self.elapsed, f, gn, lam, m))


@contextmanager
def _keep_records(rec):
    """Attach the snapshots taken so far to a failure escaping the run."""
    try:
        yield
    except (SolverFailure, DomainError) as exc:
        exc.records = rec.records
        raise


def _no_clock():
    return 0.0


def rsvrc_run(objective: FiniteSumObjective, config: SolverConfig, x0=None, *, rng=None, output_rng=None,
              callback: Callable[[StepInfo], None] | None = None, timing: bool = True) -> RunResult:
    """Run ``S`` epochs of ``T`` variance-reduced cubic steps from ``x0``.

    Returns the uniformly sampled iterate ``x^s_t`` (``s`` in ``1..S``, ``t`` in
    ``0..T-1``), the last iterate, and metric snapshots. Seconds exclude the
    time spent computing snapshots.
    """
    M = objective.manifold
    N = objective.n_components
    config.validate_for(N)
    x = M.random_point(rngs.stream(config.seed, 0, rngs.INIT)) if x0 is None else np.array(x0, dtype=float)
    M.check_point(x)
    rng = rngs.stream(config.seed, 0, rngs.BATCH) if rng is None else rng
    output_rng = rngs.stream(config.seed, 0, rngs.OUTPUT) if output_rng is None else output_rng
    out_s = int(output_rng.integers(1, config.S + 1))
    out_t = int(output_rng.integers(0, config.T))
    x_out = None

    rec = _Recorder(objective, config.lipschitz, time.perf_counter if timing else _no_clock)
    rec.add(0, 0, x)
    done = 0
    with _keep_records(rec):
        for s in range(1, config.S + 1):
            rec.start()
            anchor = EpochAnchor.build(objective, x)
            for t in range(config.T):
                if (s, t) == (out_s, out_t):
                    x_out = x.copy()
                try:
                    idx_g = _sample(rng, N, config.b_g, config.with_replacement)
                    idx_h = _sample(rng, N, config.b_h, config.with_replacement)
                    eta = _log_from_anchor(anchor, x)
                    v = vr_gradient(anchor, x, eta, idx_g)
                    U = vr_hessian_operator(anchor, x, idx_h)
                    basis, Umat = U.model_matrix()
                    g = basis.coords(v)
                    sol = _subsolve(config, g, Umat, basis)
                except (SolverFailure, DomainError) as exc:
                    raise type(exc)(f"epoch {s}, inner iteration {t}: {exc}") from exc
                x_next = M.exp(x, sol.h)
                if callback is not None:
                    rec.pause()
                    c_H = float(np.max(np.abs(np.linalg.eigvalsh(Umat))))
                    callback(StepInfo(s, t, x, x_next, v, U, Umat, basis, sol.h, sol.step_norm,
                                      step_norm_bound(float(np.linalg.norm(g)), c_H, config.sigma), sol.model_value))
                    rec.start()
                x = x_next
                done += 1
                if done % config.record_every == 0 or (s == config.S and t == config.T - 1):
                    rec.pause()
                    rec.add(s, t + 1, x)
                    rec.start()
            rec.pause()
    return RunResult(x_out, x, rec.records, (out_s, out_t))


def crc_run(objective: FiniteSumObjective, config: SolverConfig, x0=None, n_iter: int | None = None, *,
            callback: Callable[[StepInfo], None] | None = None, timing: bool = True) -> RunResult:
    """Full-batch cubic-regularised Newton: ``N`` oracle calls and one exact
    subproblem solve per iteration. Runs ``S * T`` iterations by default."""
    M = objective.manifold
    x = M.random_point(rngs.stream(config.seed, 0, rngs.INIT)) if x0 is None else np.array(x0, dtype=float)
    M.check_point(x)
    n_iter = config.S * config.T if n_iter is None else int(n_iter)
    rec = _Recorder(objective, config.lipschitz, time.perf_counter if timing else _no_clock)
    rec.add(0, 0, x)
    with _keep_records(rec):
        for k in range(1, n_iter + 1):
            rec.start()
            H = objective.riemannian_hessian(x, None, charge=True)
            basis = M.tangent_basis(x)
            Hmat = H.matrix(basis)
            g = basis.coords(H.gradient())
            try:
                sol = solve_exact_coords(g, Hmat, config.sigma, basis)
            except SolverFailure as exc:
                raise SolverFailure(f"iteration {k}: {exc}") from exc
            x_next = M.exp(x, sol.h)
            if callback is not None:
                rec.pause()
                c_H = float(np.max(np.abs(np.linalg.eigvalsh(Hmat))))
                callback(StepInfo(k, 0, x, x_next, H.gradient(), H, Hmat, basis, sol.h, sol.step_norm,
                                  step_norm_bound(float(np.linalg.norm(g)), c_H, config.sigma), sol.model_value))
                rec.start()
            x = x_next
            rec.pause()
            if k % config.record_every == 0 or k == n_iter:
                rec.add(k, 0, x)
    return RunResult(x, x, rec.records, (n_iter, 0))


def cubic_model_at(objective: FiniteSumObjective, x, sigma: float) -> CubicModel:
    """Full-batch cubic model at ``x`` (uncharged); a convenience for tests."""
    H = objective.riemannian_hessian(x, None, charge=False)
    return CubicModel(H.gradient(), H, sigma)
