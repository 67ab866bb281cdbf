import numpy as np
import pytest

from rsvrc.diagnostics import certify, certify_values, dense_hessian, fd_gradient_check, fd_hessian_check
from rsvrc.errors import ContractViolation
from rsvrc.manifolds import Euclidean, Sphere
from rsvrc.objectives import Quadratic


def test_corrupted_gradient_detected_large_gradient():
    E = Euclidean(4)
    obj = Quadratic(E, np.eye(4))
    x = np.full(4, 100.0)
    g = obj.riem_grad_full(x, False)
    assert fd_gradient_check(obj, x, grad=g) <= 1e-5
    assert fd_gradient_check(obj, x, grad=g * 1.01) >= 5e-3


@pytest.mark.parametrize("which", ["student", "sphere"])
def test_corrupted_derivatives_fail_the_check(which, small_student, small_sphere, rng):
    obj = small_student if which == "student" else small_sphere
    x = obj.manifold.random_point(rng)
    g = obj.riem_grad_full(x, False)
    assert fd_gradient_check(obj, x, grad=g * 1.01) > 1e-5 * 10
    H = obj.riemannian_hessian(x, None, charge=False)

    class Scaled:
        def apply(self, u):
            return H.apply(u) * 1.01

    assert fd_hessian_check(obj, x, hess=Scaled()) > 1e-4


@pytest.mark.parametrize("obj", [
    Quadratic(Sphere(4), np.eye(4)),  # x.x / 2 is constant on the sphere
    Quadratic(Euclidean(3), np.zeros((3, 3))),
])
def test_constant_objective_gives_zero(obj, rng):
    x = obj.manifold.random_point(rng)
    assert fd_gradient_check(obj, x) <= 1e-10
    assert fd_hessian_check(obj, x) <= 1e-6


def test_linear_objective_has_zero_second_difference():
    obj = Quadratic(Euclidean(3), np.zeros((3, 3)), np.ones(3))
    assert fd_hessian_check(obj, np.ones(3)) <= 1e-6


def test_step_size_contract(small_sphere, rng):
    x = small_sphere.manifold.random_point(rng)
    for h in (1e-8, 1e-2):
        with pytest.raises(ContractViolation):
            fd_gradient_check(small_sphere, x, h_step=h)
        with pytest.raises(ContractViolation):
            fd_hessian_check(small_sphere, x, h_step=h)


def test_probe_stream_is_independent_and_deterministic(small_sphere, rng):
    x = small_sphere.manifold.random_point(rng)
    a = fd_gradient_check(small_sphere, x)
    np.random.default_rng(99).random(5)
    assert fd_gradient_check(small_sphere, x) == a


def test_dense_hessian_identity_like():
    E = Euclidean(5)
    d = dense_hessian(Quadratic(E, np.eye(5)), np.zeros(5))
    assert np.allclose(d.matrix, np.eye(5), atol=1e-10)
    assert d.asymmetry == 0.0


@pytest.mark.parametrize("which", ["student", "sphere"])
def test_dense_hessian_symmetric(which, small_student, small_sphere, rng):
    obj = small_student if which == "student" else small_sphere
    d = dense_hessian(obj, obj.manifold.random_point(rng))
    assert d.asymmetry <= 1e-8
    assert np.allclose(d.matrix, d.matrix.T)


def test_certify_examples():
    # saddle: lambda_min = -1, L_H = 1, eps = 0.01
    r = certify_values(0.0, -1.0, 0.01, 1.0)
    assert not r.passed
    assert r.epsilon_equivalent == pytest.approx(1.0)
    # boundaries are inclusive
    assert certify_values(0.01, 0.0, 0.01, 1.0).passed
    assert certify_values(0.0, -0.1, 0.01, 1.0).passed
    assert not certify_values(0.0100001, 0.0, 0.01, 1.0).passed
    with pytest.raises(ContractViolation):
        certify_values(0.0, 0.0, 0.0, 1.0)


def test_certify_at_minimiser():
    S = Sphere(4)
    obj = Quadratic(S, np.diag([1.0, 2.0, 3.0, 4.0]))
    r = certify(obj, np.array([1.0, 0.0, 0.0, 0.0]), 1e-8, 1.0)
    assert r.passed
    assert r.lambda_min == pytest.approx(1.0)
    saddle = certify(obj, np.array([0.0, 1.0, 0.0, 0.0]), 1e-3, 1.0)
    assert not saddle.passed and saddle.lambda_min == pytest.approx(-1.0)
