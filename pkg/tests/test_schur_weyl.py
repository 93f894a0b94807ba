"""Symmetric-group/unitary duality: isotypic projectors, the universal
symmetric state, and the polynomial domination bound."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ucqkd.matfun import herm_eig, random_density
from ucqkd.schur_weyl import (
    build_isotypic_blocks,
    dim_permutation_irrep,
    dim_unitary_irrep,
    domination_factor,
    empirical_entropy,
    enumerate_types,
    enumerate_young,
    permutation_operator,
    sigma_for_string,
    sn_character,
    sorting_permutation,
    type_class,
    type_class_size,
    type_of,
    universal_symmetric_state,
)


def test_young_diagram_count():
    # partitions of n into at most d parts
    assert len(enumerate_young(4, 2)) == 3  # (4), (3,1), (2,2)
    assert len(enumerate_young(3, 3)) == 3  # (3), (2,1), (1,1,1)
    assert len(enumerate_young(5, 1)) == 1


def test_hook_length_dims():
    # standard Young tableaux counts (hook length oracle values)
    assert dim_permutation_irrep((4,)) == 1
    assert dim_permutation_irrep((3, 1)) == 3
    assert dim_permutation_irrep((2, 2)) == 2
    assert dim_permutation_irrep((2, 1, 1)) == 3
    # Weyl dimension formula for SU(2): lam1 - lam2 + 1
    for lam in ((4,), (3, 1), (2, 2)):
        l2 = lam[1] if len(lam) > 1 else 0
        assert dim_unitary_irrep(lam, 2) == lam[0] - l2 + 1


def test_dimension_sum_rule():
    # sum over diagrams of dim(S_lam) * dim(U_lam) = d^n
    for n, d in ((2, 2), (3, 2), (4, 2), (3, 3)):
        total = sum(
            dim_permutation_irrep(lam) * dim_unitary_irrep(lam, d)
            for lam in enumerate_young(n, d)
        )
        assert total == d**n


def test_sn_character_orthogonality():
    # first orthogonality relation of S_n characters, n = 4
    n = 4
    diagrams = enumerate_young(n, n)
    perms = list(itertools.permutations(range(n)))

    def cycle_type(perm):
        seen, cycles = set(), []
        for s in range(n):
            if s in seen:
                continue
            length, cur = 0, s
            while cur not in seen:
                seen.add(cur)
                cur = perm[cur]
                length += 1
            cycles.append(length)
        return tuple(sorted(cycles, reverse=True))

    for lam in diagrams:
        for mu in diagrams:
            s = sum(
                sn_character(lam, cycle_type(p)) * sn_character(mu, cycle_type(p))
                for p in perms
            )
            assert s == (math.factorial(n) if lam == mu else 0)


def test_permutation_operator_representation():
    d = 2
    perms = list(itertools.permutations(range(3)))
    for p1 in perms:
        for p2 in perms:
            comp = tuple(p1[p2[i]] for i in range(3))
            lhs = permutation_operator(p1, d) @ permutation_operator(p2, d)
            assert np.allclose(lhs, permutation_operator(comp, d), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_isotypic_projectors(n):
    d = 2
    blocks = build_isotypic_blocks(n, d)
    dim = d**n
    total = sum(b.projector for b in blocks)
    assert np.allclose(total, np.eye(dim), atol=1e-10)
    for i, bi in enumerate(blocks):
        assert np.allclose(bi.projector @ bi.projector, bi.projector, atol=1e-10)
        assert np.allclose(bi.projector, bi.projector.conj().T, atol=1e-12)
        rank = int(round(np.trace(bi.projector).real))
        assert rank == dim_permutation_irrep(bi.diagram) * dim_unitary_irrep(
            bi.diagram, d
        )
        for bj in blocks[i + 1:]:
            assert np.allclose(bi.projector @ bj.projector, 0.0, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_projectors_commute_with_permutations_and_tensor_unitaries(n):
    d = 2
    rng = np.random.default_rng(5)
    blocks = build_isotypic_blocks(n, d)
    # random tensor-power unitary
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    U1 = np.linalg.qr(A)[0]
    Un = U1
    for _ in range(n - 1):
        Un = np.kron(Un, U1)
    perm = tuple(rng.permutation(n))
    Pperm = permutation_operator(perm, d)
    for b in blocks:
        assert np.allclose(b.projector @ Un, Un @ b.projector, atol=1e-10)
        assert np.allclose(b.projector @ Pperm, Pperm @ b.projector, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_universal_state_dominates_iid(n):
    d = 2
    rng = np.random.default_rng(9)
    sig = universal_symmetric_state(n, d)
    assert abs(np.trace(sig).real - 1.0) < 1e-10
    c = domination_factor(n, d)
    assert c <= (n + 1) ** ((d + 2) * (d - 1) / 2.0) + 1e-9
    for _ in range(20):
        rho = random_density(d, rng)
        rho_n = rho
        for _ in range(n - 1):
            rho_n = np.kron(rho_n, rho)
        assert herm_eig(c * sig - rho_n)[0].min() >= -1e-10


def test_types_and_classes():
    n, k = 4, 2
    types = enumerate_types(n, k)
    assert len(types) == n + 1
    total = 0
    for t in types:
        size = type_class_size(t, n)
        members = list(type_class(t, n))
        assert len(members) == size
        assert all(type_of(x, k) == t for x in members)
        total += size
    assert total == k**n


def test_empirical_entropy_matches_type():
    x = (0, 0, 1, 1)
    assert abs(empirical_entropy(x, 2) - 1.0) < 1e-12
    assert abs(empirical_entropy((0, 0, 0), 2)) < 1e-12
    assert type_of(x, 2) == (Fraction(1, 2), Fraction(1, 2))


def test_sorting_permutation_sorts():
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = tuple(rng.integers(0, 3, size=5))
        perm = sorting_permutation(x)
        y = [0] * 5
        for i in range(5):
            y[perm[i]] = x[i]  # (s.x)_{s(i)} = x_i
        assert y == sorted(x)


def test_sigma_for_string_is_state():
    for x in ((0,), (0, 1), (0, 0, 1)):
        sig = sigma_for_string(x, 2)
        assert abs(np.trace(sig).real - 1.0) < 1e-10
        assert herm_eig(sig)[0].min() >= -1e-12
