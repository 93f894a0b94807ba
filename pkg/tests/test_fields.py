"""Finite-field arithmetic, characters, Weyl operators, and MUBs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucqkd.errors import UsageError
from ucqkd.fields import (
    field,
    mub_basis,
    mub_vector,
    relabeling_unitary,
    weyl_x,
    weyl_z,
)

FIELD_PARAMS = [(2, 1), (3, 1), (2, 2), (5, 1), (3, 2), (2, 3)]


@pytest.fixture(params=FIELD_PARAMS, ids=lambda pr: f"GF({pr[0]**pr[1]})")
def gf(request):
    return field(*request.param)


# ---------------------------------------------------------------------------
# Field axioms (exhaustive for these sizes, so the checks are exact)
# ---------------------------------------------------------------------------


def test_additive_group(gf):
    q = gf.q
    for a in range(q):
        assert gf.add(a, 0) == a
        assert gf.add(a, gf.neg(a)) == 0
        for b in range(q):
            assert gf.add(a, b) == gf.add(b, a)


def test_multiplicative_group(gf):
    q = gf.q
    for a in range(q):
        assert gf.mul(a, 1) == a
        assert gf.mul(a, 0) == 0
        if a != 0:
            assert gf.mul(a, gf.inv(a)) == 1
        for b in range(q):
            assert gf.mul(a, b) == gf.mul(b, a)


def test_distributivity(gf):
    q = gf.q
    for a in range(q):
        for b in range(q):
            for c in range(q):
                lhs = gf.mul(a, gf.add(b, c))
                rhs = gf.add(gf.mul(a, b), gf.mul(a, c))
                assert lhs == rhs


def test_frobenius_and_trace(gf):
    # trace(a) = sum of Frobenius conjugates a^{p^i}, and lands in F_p
    p, r, q = gf.p, gf.r, gf.q
    for a in range(q):
        tr = 0
        conj = a
        for _ in range(r):
            tr = gf.add(tr, conj)
            conj = gf.pow(conj, p)
        assert gf.trace(a) == gf.coeffs(tr)[0]
        assert all(c == 0 for c in gf.coeffs(tr)[1:])


def test_character_sums(gf):
    # sum_c chi(a c) = q if a == 0 else 0; chi is a homomorphism
    q = gf.q
    for a in range(q):
        s = sum(gf.character(gf.mul(a, c)) for c in range(q))
        assert abs(s - (q if a == 0 else 0.0)) < 1e-9
        for b in range(q):
            lhs = gf.character(gf.add(a, b))
            assert abs(lhs - gf.character(a) * gf.character(b)) < 1e-12


def test_bad_field_parameters():
    with pytest.raises(UsageError):
        field(4, 1)
    with pytest.raises(UsageError):
        field(2, 0)


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
@settings(max_examples=60, deadline=None)
def test_field_axioms_hypothesis(a, b, c):
    gf = field(3, 2)
    assert gf.mul(a, gf.add(b, c)) == gf.add(gf.mul(a, b), gf.mul(a, c))
    assert gf.sub(a, b) == gf.add(a, gf.neg(b))
    if b != 0:
        assert gf.mul(gf.mul(a, b), gf.inv(b)) == a


# ---------------------------------------------------------------------------
# Weyl operators
# ---------------------------------------------------------------------------


def test_weyl_commutation_single(gf):
    q = gf.q
    for a in range(q):
        for b in range(q):
            X, Z = weyl_x(gf, [a]), weyl_z(gf, [b])
            phase = gf.character(gf.mul(a, b))
            assert np.allclose(Z @ X, phase * (X @ Z), atol=1e-12)


def test_weyl_composition(gf):
    q = gf.q
    for a in range(q):
        for b in range(q):
            assert np.allclose(
                weyl_x(gf, [a]) @ weyl_x(gf, [b]),
                weyl_x(gf, [gf.add(a, b)]),
                atol=1e-12,
            )
            assert np.allclose(
                weyl_z(gf, [a]) @ weyl_z(gf, [b]),
                weyl_z(gf, [gf.add(a, b)]),
                atol=1e-12,
            )


def test_weyl_multiqudit_commutation():
    gf = field(2, 1)
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = rng.integers(0, 2, size=3)
        b = rng.integers(0, 2, size=3)
        X, Z = weyl_x(gf, a), weyl_z(gf, b)
        phase = gf.character(gf.vec_dot(a, b))
        assert np.allclose(Z @ X, phase * (X @ Z), atol=1e-12)


def test_weyl_orthogonality(gf):
    # Tr[W(a,b)^dag W(a',b')] = q delta: the Weyl set is an operator basis
    q = gf.q
    ops = [weyl_x(gf, [a]) @ weyl_z(gf, [b]) for a in range(q) for b in range(q)]
    gram = np.array([[np.trace(P.conj().T @ Q) for Q in ops] for P in ops])
    assert np.allclose(gram, q * np.eye(q * q), atol=1e-9)


# ---------------------------------------------------------------------------
# MUB and relabeling
# ---------------------------------------------------------------------------


def test_mub_unbiased_and_orthonormal(gf):
    q = gf.q
    B = mub_basis(gf)
    assert np.allclose(B.conj().T @ B, np.eye(q), atol=1e-12)
    assert np.allclose(np.abs(B) ** 2, 1.0 / q, atol=1e-12)


def test_mub_diagonalizes_x(gf):
    # X(1)|c~> = chi(c)... the conjugate basis consists of X eigenvectors
    q = gf.q
    X = weyl_x(gf, [1])
    for c in range(q):
        v = mub_vector(gf, c)
        w = X @ v
        lam = w[np.argmax(np.abs(v))] / v[np.argmax(np.abs(v))]
        assert np.allclose(w, lam * v, atol=1e-12)
        assert abs(abs(lam) - 1.0) < 1e-12


def test_relabeling_conjugation():
    gf = field(2, 1)
    rng = np.random.default_rng(3)
    n = 2
    while True:
        C = rng.integers(0, 2, size=(n, n))
        if gf.mat_rank(C) == n:
            break
    U = relabeling_unitary(gf, C)
    assert np.allclose(U.conj().T @ U, np.eye(2**n), atol=1e-12)
    for _ in range(5):
        a = rng.integers(0, 2, size=n)
        b = rng.integers(0, 2, size=n)
        lhs = U.conj().T @ weyl_x(gf, a) @ U
        rhs = weyl_x(gf, gf.mat_mul(a.reshape(1, -1), C.T).ravel())
        assert np.allclose(lhs, rhs, atol=1e-12)
        lhs = U.conj().T @ weyl_z(gf, b) @ U
        rhs = weyl_z(gf, gf.mat_mul(b.reshape(1, -1), gf.mat_inv(C)).ravel())
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_index_vector_roundtrip(gf):
    n = 2
    for idx in range(min(gf.q**n, 64)):
        v = gf.index_vector(idx, n)
        assert gf.vector_index(v) == idx
