import numpy as np
import pytest
from scipy import integrate

from pclpv.galerkin import (
    PsiOrdering,
    TensorError,
    build_tensors,
    gram,
    kron_identity_check,
    lift,
    project_dynamics,
    psd_sqrt,
)
from pclpv.orthopoly import ParameterDistribution, default_rule, eval_basis, gauss_rule, make_basis
from pclpv.plant import UncertainLinearSystem, constant_system

U = ParameterDistribution.uniform


def test_psi_ordering_layout():
    o = PsiOrdering(3)
    assert len(o) == 10
    assert o.pairs[:5] == ((0, 0), (1, 0), (2, 0), (3, 0), (1, 1))
    assert o.pairs[-2:] == ((3, 2), (3, 3))
    assert o.scale.tolist() == [1 if i == j else 2 for i, j in o.pairs]


def test_psi_reconstruction(rng):
    N, n = 4, 3
    basis = make_basis(U(-20, 20), N)
    o = PsiOrdering(N)
    blocks = {}
    for i, j in o.pairs:
        b = rng.normal(size=(n, n))
        blocks[(i, j)] = blocks[(j, i)] = b + b.T
    V = np.stack([blocks[p] for p in o.pairs])
    for d in rng.uniform(-20, 20, 50):
        phi = eval_basis(basis, d)
        direct = sum(phi[i] * phi[j] * blocks[(i, j)] for i in range(N + 1) for j in range(N + 1))
        via_psi = lift(o.psi(phi), n).T @ V.reshape(-1, n)
        assert np.abs(via_psi - direct).max() <= 1e-10 * max(1.0, np.abs(direct).max())
        np.testing.assert_allclose(o.reconstruct(V, phi), direct, atol=1e-10)


@pytest.mark.parametrize(
    "M, v",
    [(np.eye(2), np.array([1.0, 0.0])), (np.zeros((2, 3)), np.array([1.0, 2.0, 3.0]))],
)
def test_kron_identity_examples(M, v):
    assert kron_identity_check(M, v)


def test_kron_identity_random(rng):
    for _ in range(100):
        m, n, k = rng.integers(1, 5, size=3)
        assert kron_identity_check(rng.normal(size=(m, n)), rng.normal(size=k))


def test_kron_identity_shape_mismatch():
    with pytest.raises(ValueError):
        kron_identity_check(np.ones((2, 2, 2)), np.ones(3))


def test_gram_block_diagonal():
    basis = make_basis(U(-20, 20), 5)
    rule = gauss_rule(basis.distribution, 12)
    n = 2
    G = sum(w * lift(eval_basis(basis, d), n) @ lift(eval_basis(basis, d), n).T for d, w in zip(rule.nodes, rule.weights))
    mask = np.kron(np.eye(6), np.ones((n, n))) == 0
    assert np.abs(G[mask]).max() <= 1e-10
    np.testing.assert_allclose(G, gram(basis, n), atol=1e-12)


def test_project_scalar_hand_quadrature():
    dist = U(-1, 1)
    system = UncertainLinearSystem(1, 1, lambda d: [[d]], lambda d: [[0.0]], dist)
    A_pc = project_dynamics(system, make_basis(dist, 1), gauss_rule(dist, 4))
    np.testing.assert_allclose(A_pc, [[0, 1 / 3], [1, 0]], atol=1e-14)


def test_project_constant_collapses():
    dist = U(-1, 1)
    A0 = np.array([[0.0, 1.0], [-2.0, -0.3]])
    system = constant_system(A0, np.zeros((2, 1)), dist)
    A_pc = project_dynamics(system, make_basis(dist, 3), gauss_rule(dist, 8))
    np.testing.assert_allclose(A_pc, np.kron(np.eye(4), A0), atol=1e-13)


def test_tensors_zero_dynamics():
    dist = U(-1, 1)
    system = constant_system(np.zeros((2, 2)), np.zeros((2, 1)), dist)
    t = build_tensors(system, make_basis(dist, 2), np.eye(2), np.eye(1), gauss_rule(dist, 10))
    assert not t.M1.any() and not t.M2.any()
    assert np.abs(t.M3).max() > 0 and np.abs(t.M4).max() > 0


def test_tensors_scalar_degenerate():
    dist = U(-1, 1)
    system = constant_system([[-0.7]], [[1.3]], dist)
    t = build_tensors(system, make_basis(dist, 0), [[2.0]], [[0.5]], gauss_rule(dist, 3))
    for got, want in [(t.M1, -0.7), (t.M2, 1.3), (t.M3, 2.0), (t.M4, 0.5), (t.sqrtM3, np.sqrt(2.0))]:
        np.testing.assert_allclose(got, [[want]], atol=1e-14)


def test_tensors_reject_bad_R():
    dist = U(-1, 1)
    system = constant_system([[-1.0]], [[1.0]], dist)
    with pytest.raises(ValueError):
        build_tensors(system, make_basis(dist, 1), [[1.0]], [[0.0]], gauss_rule(dist, 4))


def _brute_force(system, basis, Q, R):
    """Entry-by-entry loops over psi pairs and basis indices with adaptive quadrature."""
    N, n, m = basis.degree, system.n, system.m
    o = PsiOrdering(N)
    L = len(o)
    lo, hi = system.distribution.support
    dens = 1.0 / (hi - lo)

    def E(f):
        total = 0.0
        for a, b in ((lo, 0.0), (0.0, hi)):
            total += integrate.quad(lambda d: f(d) * dens, a, b, epsabs=1e-13, epsrel=1e-13)[0]
        return total

    def phi(d, i):
        return eval_basis(basis, d)[i]

    def psi(d, k):
        i, j = o.pairs[k]
        return o.scale[k] * phi(d, i) * phi(d, j)

    M1 = np.zeros(((N + 1) * L * n, (N + 1) * n))
    M3 = np.zeros(((N + 1) * L * n,) * 2)
    for a in range(N + 1):
        for k in range(L):
            for r in range(n):
                row = (a * L + k) * n + r
                for b in range(N + 1):
                    for s in range(n):
                        M1[row, b * n + s] = E(lambda d: phi(d, a) * psi(d, k) * phi(d, b) * system.evaluate(d)[0][s, r])
                for b in range(N + 1):
                    for l in range(L):
                        for s in range(n):
                            if Q[r, s] != 0:
                                M3[row, (b * L + l) * n + s] = Q[r, s] * E(
                                    lambda d: phi(d, a) * psi(d, k) * phi(d, b) * psi(d, l)
                                )
    M2 = np.zeros(((N + 1) ** 2 * m, (N + 1) * n))
    for a in range(N + 1):
        for c in range(N + 1):
            for r in range(m):
                for b in range(N + 1):
                    for s in range(n):
                        M2[(a * (N + 1) + c) * m + r, b * n + s] = E(
                            lambda d: phi(d, a) * phi(d, c) * phi(d, b) * system.evaluate(d)[1][s, r]
                        )
    return M1, M2, M3


def test_tensors_against_brute_force(missile_system):
    N = 1
    basis = make_basis(missile_system.distribution, N)
    Q, R = 0.2 * np.eye(2), np.eye(1)
    t = build_tensors(missile_system, basis, Q, R, default_rule(missile_system.distribution, N))
    M1, M2, M3 = _brute_force(missile_system, basis, Q, R)
    np.testing.assert_allclose(t.M1, M1, atol=1e-10)
    np.testing.assert_allclose(t.M2, M2, atol=1e-10)
    np.testing.assert_allclose(t.M3, M3, atol=1e-10)


def test_missile_tensor_dimensions_and_psd(missile_system):
    N = 3
    basis = make_basis(missile_system.distribution, N)
    t = build_tensors(missile_system, basis, 0.2 * np.eye(2), np.eye(1), default_rule(missile_system.distribution, N))
    L = len(PsiOrdering(N))
    assert L == 10
    assert t.M3.shape == ((N + 1) * L * 2,) * 2 == (80, 80)
    assert t.M4.shape == ((N + 1) ** 2,) * 2
    assert t.M1.shape == (80, 8) and t.M2.shape == (16, 8)
    for M, S in [(t.M3, t.sqrtM3), (t.M4, t.sqrtM4)]:
        assert np.array_equal(M, M.T)
        assert np.linalg.eigvalsh(M).min() >= -1e-8
        assert np.linalg.norm(S @ S - M) <= 1e-8 * np.linalg.norm(M)


def test_psd_sqrt_rejects_negative():
    with pytest.raises(TensorError):
        psd_sqrt(np.diag([1.0, -1e-3]))
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, -1e-12])), np.diag([2.0, 0.0]))
