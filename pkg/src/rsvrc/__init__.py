"""Stochastic variance-reduced cubic-regularised Newton methods on Riemannian manifolds."""

from .cubic import CubicModel, CubicSolution, model_grad, model_value, solve_exact, solve_inexact, verify_inexact
from .diagnostics import StationarityReport, certify, dense_hessian, fd_gradient_check, fd_hessian_check
from .errors import ContractViolation, DomainError, InvariantViolation, RsvrcError, SolverFailure, UsageError
from .manifolds import SPD, Euclidean, Manifold, Sphere, TangentBasis, TangentVector
from .objectives import FiniteSumObjective, Quadratic, SphereClassifier, StudentT
from .optimizer import (
    EpochAnchor,
    RunRecord,
    SolverConfig,
    crc_run,
    lambda_min_hess,
    mu,
    rsvrc_run,
    sigma_lower_bound_check,
    vr_gradient,
    vr_hessian_operator,
)

__version__ = "0.1.0"
