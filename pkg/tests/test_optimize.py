"""Interior-point SDP, facial reduction, concave maximization, and the
classical divergence projections."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from ucqkd.errors import InfeasibleError, UsageError
from ucqkd.matfun import herm_eig, random_density
from ucqkd.optimize import (
    FeasibleSet,
    divergence_bits,
    facial_reduce,
    herm_basis,
    joint_divergence_minimizer,
    mat_to_vec,
    pinch,
    renyi_objective_and_gradient,
    sequential_linearization,
    solve_linear_sdp,
    tilted_projection,
    vec_to_mat,
    von_neumann_objective_and_gradient,
)

KEY_PINCH = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]


def _rand_herm(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (A + A.conj().T)


# ---------------------------------------------------------------------------
# Hermitian vectorization
# ---------------------------------------------------------------------------


def test_herm_basis_roundtrip():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        basis = herm_basis(d)
        M = _rand_herm(d, rng)
        v = mat_to_vec(M, basis)
        assert v.shape == (d * d,)
        assert np.allclose(vec_to_mat(v, basis), M, atol=1e-12)
        # the basis is orthonormal in Hilbert-Schmidt inner product
        gram = np.array([
            [np.trace(basis[i] @ basis[j]).real for j in range(d * d)]
            for i in range(d * d)
        ])
        assert np.allclose(gram, np.eye(d * d), atol=1e-12)


# ---------------------------------------------------------------------------
# Linear SDP
# ---------------------------------------------------------------------------


def test_sdp_unconstrained_maximum_is_top_eigenvalue():
    rng = np.random.default_rng(1)
    for d in (2, 3, 4):
        C = _rand_herm(d, rng)
        res = solve_linear_sdp(C, FeasibleSet(dim=d))
        top = herm_eig(C)[0].max()
        assert abs(res.primal - top) <= 1e-6
        assert res.primal <= res.dual_bound + 1e-9
        assert res.gap <= 1e-5


def test_sdp_equality_constraint():
    # maximize <Z, rho> with Tr[X rho] = 0 forces rho into a Z eigenstate
    Z = np.diag([1.0, -1.0])
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    fs = FeasibleSet(dim=2, eq=[(X, 0.0)])
    res = solve_linear_sdp(Z, fs)
    assert abs(res.primal - 1.0) <= 1e-6
    assert abs(res.rho[0, 0].real - 1.0) <= 1e-5


def test_sdp_inequality_constraint():
    Z = np.diag([1.0, -1.0])
    P0 = np.diag([1.0, 0.0])
    fs = FeasibleSet(dim=2, ineq=[(P0, 0.3)])
    res = solve_linear_sdp(Z, fs)
    # optimum: rho = 0.3|0><0| + 0.7|1><1| -> value -0.4
    assert abs(res.primal - (-0.4)) <= 1e-6


def test_sdp_scipy_cross_check():
    """Oracle: parametrize 2x2 states by Bloch vector and solve with SLSQP."""
    rng = np.random.default_rng(2)
    paulis = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]]),
        np.diag([1.0, -1.0]).astype(complex),
    ]
    for _ in range(5):
        C = _rand_herm(2, rng)
        A = _rand_herm(2, rng)
        ub = float(rng.uniform(0.2, 0.8))

        def rho_of(r):
            out = 0.5 * np.eye(2, dtype=complex)
            for ri, P in zip(r, paulis):
                out += 0.5 * ri * P
            return out

        def neg(r):
            return -float(np.trace(C @ rho_of(r)).real)

        cons = [
            {"type": "ineq", "fun": lambda r: 1.0 - r @ r},
            {"type": "ineq",
             "fun": lambda r: ub - float(np.trace(A @ rho_of(r)).real)},
        ]
        best = math.inf
        for _ in range(8):
            r0 = rng.uniform(-0.5, 0.5, size=3)
            out = minimize(neg, r0, constraints=cons, method="SLSQP")
            if out.success:
                best = min(best, out.fun)
        res = solve_linear_sdp(C, FeasibleSet(dim=2, ineq=[(A, ub)]))
        assert abs(res.primal - (-best)) <= 1e-5


def test_sdp_infeasible_raises():
    P0 = np.diag([1.0, 0.0])
    P1 = np.diag([0.0, 1.0])
    fs = FeasibleSet(dim=2, eq=[(P0, 0.8), (P1, 0.8)])  # sums over trace
    with pytest.raises(InfeasibleError):
        solve_linear_sdp(np.eye(2), fs)


# ---------------------------------------------------------------------------
# Facial reduction
# ---------------------------------------------------------------------------


def test_facial_reduce_zero_upper_bound():
    P0 = np.diag([1.0, 0.0, 0.0])
    fs = FeasibleSet(dim=3, ineq=[(P0, 0.0)])
    red, V = facial_reduce(fs)
    assert red.dim == 2
    assert np.allclose(V.conj().T @ V, np.eye(2), atol=1e-12)
    assert np.allclose(P0 @ V, 0.0, atol=1e-10)


def test_facial_reduce_saturating_equality():
    # Tr[M rho] = lambda_max(M) * trace pins rho onto the top eigenspace
    M = np.diag([1.0, 1.0, 0.25])
    fs = FeasibleSet(dim=3, eq=[(M, 1.0)], trace=1.0)
    red, V = facial_reduce(fs)
    assert red.dim == 2
    # the singleton case: two equalities force the maximally mixed qubit
    P = np.diag([1.0, 0.0, 0.0])
    fs2 = FeasibleSet(dim=3, eq=[(P, 0.0), (np.diag([0.0, 1.0, 0.0]), 0.5)])
    red2, V2 = facial_reduce(fs2)
    assert red2.dim <= 2


def test_facial_reduce_keeps_feasible_points():
    M = np.diag([1.0, 0.5, 0.5])
    fs = FeasibleSet(dim=3, eq=[(M, 0.5)])  # forces support off |0>
    red, V = facial_reduce(fs)
    assert red.dim == 2
    rho_small = np.eye(red.dim) / red.dim
    rho = V @ rho_small @ V.conj().T
    assert abs(np.trace(M @ rho).real - 0.5) <= 1e-10


# ---------------------------------------------------------------------------
# Concave objectives and sequential linearization
# ---------------------------------------------------------------------------


def test_renyi_objective_gradient_finite_differences():
    rng = np.random.default_rng(3)
    basis = herm_basis(2)
    for alpha in (0.2, 0.38, 0.6):
        for _ in range(5):
            sigma = random_density(2, rng) + 0.05 * np.eye(2)
            val, grad = renyi_objective_and_gradient(sigma, alpha, KEY_PINCH, 1.0)
            D = _rand_herm(2, rng)
            h = 1e-6
            up, _ = renyi_objective_and_gradient(sigma + h * D, alpha, KEY_PINCH, 1.0)
            dn, _ = renyi_objective_and_gradient(sigma - h * D, alpha, KEY_PINCH, 1.0)
            fd = (up - dn) / (2 * h)
            direct = float(np.trace(grad @ D).real)
            assert abs(fd - direct) <= 1e-5 * max(1.0, abs(fd))


def test_objectives_concave_linearization():
    rng = np.random.default_rng(4)
    for _ in range(30):
        s1 = random_density(2, rng) + 0.02 * np.eye(2)
        s2 = random_density(2, rng) + 0.02 * np.eye(2)
        for obj in (
            lambda s: renyi_objective_and_gradient(s, 0.3, KEY_PINCH, 1.0),
            lambda s: von_neumann_objective_and_gradient(s, KEY_PINCH, 1.0),
        ):
            v1, g1 = obj(s1)
            v2, _ = obj(s2)
            lin = v1 + float(np.trace(g1 @ (s2 - s1)).real)
            assert v2 <= lin + 1e-8


def test_sequential_linearization_entropy_maximum():
    """Oracle: the pinching relative entropy objective log|X| - D(s||P(s)) is
    maximized (value log|X|) by any pinching-invariant state."""

    def obj(s):
        return von_neumann_objective_and_gradient(s, KEY_PINCH, 1.0)

    res = sequential_linearization(obj, FeasibleSet(dim=2), tol=1e-9)
    assert abs(res.value - 1.0) <= 1e-7
    assert res.value <= res.upper_bound + 1e-12
    assert res.upper_bound - res.value <= 1e-6
    # constrained: Tr[|0><0| rho] = 0.9 forces D(s||P(s)) = 0 still
    fs = FeasibleSet(dim=2, eq=[(np.diag([1.0, 0.0]), 0.9)])
    res2 = sequential_linearization(obj, fs, tol=1e-9)
    assert abs(res2.value - 1.0) <= 1e-6


def test_sequential_linearization_scipy_cross_check():
    """Random constrained Renyi-objective maximization versus a Bloch-vector
    SLSQP oracle."""
    rng = np.random.default_rng(5)
    paulis = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]]),
        np.diag([1.0, -1.0]).astype(complex),
    ]
    A = _rand_herm(2, rng)
    ub = 0.4

    def obj(s):
        return renyi_objective_and_gradient(s, 0.4, KEY_PINCH, 1.0)

    def rho_of(r):
        out = 0.5 * np.eye(2, dtype=complex)
        for ri, P in zip(r, paulis):
            out += 0.5 * ri * P
        return out

    def neg(r):
        return -obj(rho_of(0.999 * r))[0]

    cons = [
        {"type": "ineq", "fun": lambda r: 1.0 - r @ r},
        {"type": "ineq",
         "fun": lambda r: ub - float(np.trace(A @ rho_of(r)).real)},
    ]
    best = math.inf
    for _ in range(10):
        out = minimize(neg, rng.uniform(-0.4, 0.4, 3), constraints=cons,
                       method="SLSQP")
        if out.success:
            best = min(best, out.fun)
    res = sequential_linearization(obj, FeasibleSet(dim=2, ineq=[(A, ub)]),
                                   tol=1e-9)
    assert res.value >= -best - 1e-5
    assert res.upper_bound >= -best - 1e-8


def test_pinch_is_projection():
    rng = np.random.default_rng(6)
    s = _rand_herm(2, rng)
    once = pinch(s, KEY_PINCH)
    assert np.allclose(pinch(once, KEY_PINCH), once, atol=1e-12)
    assert abs(np.trace(once) - np.trace(s)) <= 1e-12


# ---------------------------------------------------------------------------
# Classical divergence projections
# ---------------------------------------------------------------------------


def test_tilted_projection_against_slsqp():
    rng = np.random.default_rng(7)
    for _ in range(10):
        q = rng.dirichlet(np.ones(4))
        gamma = rng.normal(size=4)
        c = float(rng.uniform(q @ gamma, gamma.max() - 1e-6))
        p, div = tilted_projection(q, gamma, c)
        assert abs(p.sum() - 1.0) <= 1e-10
        assert p @ gamma >= c - 1e-8
        # oracle: direct constrained minimization of D(p||q)
        def neg(x):
            x = np.clip(x, 1e-12, None)
            x = x / x.sum()
            return divergence_bits(x, q)

        cons = [
            {"type": "eq", "fun": lambda x: x.sum() - 1.0},
            {"type": "ineq", "fun": lambda x: x @ gamma - c},
            {"type": "ineq", "fun": lambda x: x},
        ]
        out = minimize(neg, q.copy(), constraints=cons, method="SLSQP")
        if out.success:
            assert div <= neg(out.x) + 1e-6


def test_tilted_projection_inactive_constraint():
    q = np.array([0.7, 0.3])
    p, div = tilted_projection(q, np.array([1.0, 0.0]), 0.5)
    assert div == 0.0
    assert np.allclose(p, q)


def test_divergence_bits_oracle():
    p = np.array([0.5, 0.5])
    q = np.array([0.25, 0.75])
    expect = 0.5 * math.log2(2.0) + 0.5 * math.log2(0.5 / 0.75)
    assert abs(divergence_bits(p, q) - expect) <= 1e-12
    assert divergence_bits(q, q) == 0.0


def test_joint_divergence_minimizer_feasibility():
    # q(rho) from a 2-outcome measurement; p constrained to a halfspace
    P0 = np.diag([1.0, 0.0])
    P1 = np.diag([0.0, 1.0])
    fs = FeasibleSet(dim=2)
    gamma = np.array([1.0, 0.0])
    div, p, rho = joint_divergence_minimizer(
        [P0, P1], np.zeros(2), fs, gamma, 0.9
    )
    assert p[0] >= 0.9 - 1e-8
    # rho free: q can match p exactly, so the joint minimum is zero
    assert div <= 1e-7


def test_renyi_objective_rejects_bad_alpha():
    with pytest.raises(UsageError):
        renyi_objective_and_gradient(np.eye(2) / 2, 1.5, KEY_PINCH, 1.0)
