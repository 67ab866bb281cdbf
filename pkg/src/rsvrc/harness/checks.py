"""Diagnostics suite behind the ``check`` subcommand."""

from __future__ import annotations

from dataclasses import dataclass

from .. import rng as rngs
from ..diagnostics import dense_hessian, fd_gradient_check, fd_hessian_check, lanczos_lambda_min
from ..optimizer import SolverConfig, rsvrc_run
from .data import simulate_classifier, simulate_student_t


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tol:.0e})"


def small_dataset(problem: str, seed: int):
    if problem == "student_t":
        return simulate_student_t(4, 300, 3.0, 0.1, seed)
    return simulate_classifier(6, 400, 0.02, seed)


def run_checks(problem: str, seed: int = 0, n_points: int = 10) -> list[CheckResult]:
    ds = small_dataset(problem, seed)
    obj = ds.objective()
    M = obj.manifold
    probe = rngs.stream(seed, 0, rngs.PROBE)
    pts = [M.random_point(probe) for _ in range(n_points)]

    out = []
    out.append(CheckResult("geodesic finite-difference gradient", max(fd_gradient_check(obj, x, 5, 1e-5, probe)
                                                                       for x in pts), 1e-5))
    out.append(CheckResult("geodesic finite-difference Hessian", max(fd_hessian_check(obj, x, 5, 1e-4, probe)
                                                                      for x in pts), 1e-4))
    asym, gap = 0.0, 0.0
    for x in pts[:3]:
        D = dense_hessian(obj, x)
        asym = max(asym, D.asymmetry)
        gap = max(gap, abs(D.eigenvalues[0] - lanczos_lambda_min(obj, x, probe)))
    out.append(CheckResult("Hessian self-adjointness in a tangent basis", asym, 1e-8))
    out.append(CheckResult("Lanczos vs dense smallest eigenvalue", gap, 1e-6))

    roundtrip, iso = 0.0, 0.0
    for x in pts:
        v = M.random_tangent(x, probe) * 0.5
        y = M.exp(x, v)
        roundtrip = max(roundtrip, M.norm(x, M.log(x, y) - v))
        u = M.random_tangent(x, probe)
        iso = max(iso, abs(M.norm(y, M.transport(x, y, u)) - M.norm(x, u)))
    out.append(CheckResult("exp/log round trip", roundtrip, 1e-8))
    out.append(CheckResult("transport isometry", iso, 1e-8))

    # full batches make the variance-reduced estimators exact
    N = obj.n_components
    cfg = SolverConfig(sigma=1.0, S=2, T=3, b_g=N, b_h=N, seed=seed, with_replacement=False)
    worst = [0.0]

    def cb(info):
        H = obj.riemannian_hessian(info.x, None, charge=False)
        worst[0] = max(worst[0], M.norm(info.x, info.v - H.gradient()))
        u = M.random_tangent(info.x, probe)
        worst[0] = max(worst[0], M.norm(info.x, info.U(u) - H.apply(u)) / (1 + M.norm(info.x, u)))

    rsvrc_run(obj, cfg, pts[0], callback=cb, timing=False)
    out.append(CheckResult("full-batch estimator degeneracy", worst[0], 1e-10))
    return out
