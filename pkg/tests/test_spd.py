import numpy as np
import pytest
from scipy.linalg import expm, logm, sqrtm

from rsvrc.errors import DomainError
from rsvrc.manifolds import SPD


def rand_spd(rng, p, spread=1.0):
    a = rng.standard_normal((p, p))
    return a @ a.T / p + spread * np.eye(p)


def rand_sym(rng, p, scale=1.0):
    a = rng.standard_normal((p, p)) * scale
    return 0.5 * (a + a.T)


def test_constants():
    M = SPD(4)
    assert M.injectivity_radius == np.inf
    assert M.dim == 10


def test_inner_examples():
    M = SPD(2)
    I = np.eye(2)
    assert M.inner(I, M.tangent(I, I), M.tangent(I, I)) == pytest.approx(2.0)
    X = np.diag([2.0, 1.0])
    U = M.tangent(X, np.diag([2.0, 0.0]))
    assert M.inner(X, U, U) == pytest.approx(1.0)


def test_inner_symmetric(rng):
    M = SPD(5)
    X = rand_spd(rng, 5)
    U, V = M.tangent(X, rand_sym(rng, 5)), M.tangent(X, rand_sym(rng, 5))
    assert abs(M.inner(X, U, V) - M.inner(X, V, U)) <= 1e-14 * (1 + abs(M.inner(X, U, V)))


def test_exp_log_examples():
    M = SPD(2)
    I = np.eye(2)
    assert np.allclose(M.exp(I, M.zero(I)), I)
    assert np.allclose(M.exp(I, M.tangent(I, np.diag([1.0, 0.0]))), np.diag([np.e, 1.0]))
    assert np.allclose(M.log(I, np.diag([np.e, 1.0])).ambient, np.diag([1.0, 0.0]), atol=1e-14)
    assert np.allclose(M.log(I, I).ambient, 0)


def test_exp_at_identity_is_expm(rng):
    M = SPD(4)
    V = rand_sym(rng, 4)
    assert np.allclose(M.exp(np.eye(4), M.tangent(np.eye(4), V)), expm(V), atol=1e-12)


def test_exp_matches_closed_form(rng):
    M = SPD(4)
    X, V = rand_spd(rng, 4), rand_sym(rng, 4)
    s = np.real(sqrtm(X))
    si = np.linalg.inv(s)
    want = s @ expm(si @ V @ si) @ s
    assert np.allclose(M.exp(X, M.tangent(X, V)), want, atol=1e-10)
    Y = rand_spd(rng, 4)
    want_log = s @ np.real(logm(si @ Y @ si)) @ s
    assert np.allclose(M.log(X, Y).ambient, want_log, atol=1e-9)


def test_transport_examples(rng):
    M = SPD(2)
    I = np.eye(2)
    Y = np.diag([4.0, 1.0])
    assert np.allclose(M.transport(I, Y, M.tangent(I, I)).ambient, Y)
    X = rand_spd(rng, 2)
    U = M.tangent(X, rand_sym(rng, 2))
    assert np.allclose(M.transport(X, X, U).ambient, U.ambient, atol=1e-12)


def test_transport_identity_to_any_maps_identity_to_point(rng):
    M = SPD(3)
    Y = rand_spd(rng, 3)
    assert np.allclose(M.transport(np.eye(3), Y, M.tangent(np.eye(3), np.eye(3))).ambient, Y, atol=1e-12)


def test_distance_examples(rng):
    M = SPD(2)
    assert M.distance(np.eye(2), np.diag([np.e**2, 1.0])) == pytest.approx(2.0)
    X = rand_spd(rng, 2)
    assert M.distance(X, X) == pytest.approx(0.0, abs=1e-12)


def test_affine_invariance(rng):
    M = SPD(4)
    X, Y = rand_spd(rng, 4), rand_spd(rng, 4)
    A = rng.standard_normal((4, 4)) + 2 * np.eye(4)
    assert abs(M.distance(A @ X @ A.T, A @ Y @ A.T) - M.distance(X, Y)) <= 1e-8


def test_log_norm_is_distance(rng):
    M = SPD(4)
    X, Y = rand_spd(rng, 4), rand_spd(rng, 4)
    assert abs(M.norm(X, M.log(X, Y)) - M.distance(X, Y)) <= 1e-10


def test_roundtrip_and_isometry_random(rng):
    M = SPD(5)
    for _ in range(50):
        X = rand_spd(rng, 5)
        U = M.tangent(X, rand_sym(rng, 5, 0.7))
        Y = M.exp(X, U)
        assert M.norm(X, M.log(X, Y) - U) <= 1e-8 * (1 + M.norm(X, U))
        V, W = M.tangent(X, rand_sym(rng, 5)), M.tangent(X, rand_sym(rng, 5))
        got = M.inner(Y, M.transport(X, Y, V), M.transport(X, Y, W))
        assert abs(got - M.inner(X, V, W)) <= 1e-8 * (1 + abs(M.inner(X, V, W)))
        back = M.transport(Y, X, M.transport(X, Y, V))
        assert np.allclose(back.ambient, V.ambient, atol=1e-9)


def test_velocity_transport(rng):
    M = SPD(3)
    X, Y = rand_spd(rng, 3), rand_spd(rng, 3)
    assert np.allclose(M.transport(X, Y, M.log(X, Y)).ambient, -M.log(Y, X).ambient, atol=1e-9)


def test_basis_orthonormal(rng):
    M = SPD(4)
    X = rand_spd(rng, 4)
    B = M.basis_vectors(X)
    G = M.gram(X, B, B)
    assert np.allclose(G, np.eye(M.dim), atol=1e-12)


def test_not_pd_rejected():
    M = SPD(2)
    with pytest.raises(DomainError):
        M.check_point(np.diag([1.0, -1.0]))
    with pytest.raises(DomainError):
        M.log(np.eye(2), np.diag([1.0, 0.0]))
